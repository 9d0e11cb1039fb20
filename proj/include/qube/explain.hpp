#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qube/params.hpp"

namespace qube::explain {

// Default catalog, identical to data/madlibs.json (a test keeps them in
// sync). Edit the data file and paste it here.
inline constexpr std::string_view kDefaultCatalog = R"json({
  "version": 1,
  "qualifier_rule": "Legal values are split into thirds by position: the lowest third uses qualifiers.low, the top third qualifiers.high, the rest qualifiers.middle. Band of the i-th of n values = floor(3 * i / n).",
  "slots": "{value} is replaced by the value followed by the unit (unit_singular when the value is 1); {qualifier} by the band word.",
  "parameters": [
    {
      "id": "goal_reward",
      "display_name": "Goal Reward",
      "values": [1, 3, 5, 7, 10, 30, 100],
      "unit": "points",
      "unit_singular": "point",
      "template": "This Goal Reward gives your agent {value} when it reaches the goal. This makes the goal {qualifier} for your agent to learn to seek out.",
      "qualifiers": {"low": "less attractive", "middle": "moderately attractive", "high": "very attractive"},
      "source": "authored"
    },
    {
      "id": "punishment_value",
      "display_name": "Punishment Value",
      "values": [1, 3, 5, 7, 10, 30, 100],
      "unit": "points",
      "unit_singular": "point",
      "template": "This Punishment Value takes {value} from your agent when it collides with a ghost. This makes a ghost {qualifier} for your agent to learn to avoid.",
      "qualifiers": {"low": "less important", "middle": "moderately important", "high": "very important"},
      "source": "authored"
    },
    {
      "id": "range_of_movement",
      "display_name": "Range of Movement",
      "values": [0, 1, 2, 3, 4, 5],
      "unit": "tiles",
      "unit_singular": "tile",
      "template": "This Range of Movement allows you ghosts to move in {value} from their original starting point. This makes a ghost {qualifier} for your agent to learn to avoid.",
      "qualifiers": {"low": "easier", "middle": "moderately difficult", "high": "difficult"},
      "source": "original"
    },
    {
      "id": "learning_rate",
      "display_name": "Learning Rate",
      "values": [0.1, 0.3, 0.5, 0.7, 0.9],
      "unit": "",
      "unit_singular": "",
      "template": "This Learning Rate lets your agent blend {value} of every new experience into what it already believes. This makes your agent learn {qualifier} from each attempt.",
      "qualifiers": {"low": "slowly but steadily", "middle": "at a moderate pace", "high": "quickly but erratically"},
      "source": "authored"
    },
    {
      "id": "discount_factor",
      "display_name": "Discount Factor",
      "values": [0.1, 0.3, 0.5, 0.7, 0.9],
      "unit": "",
      "unit_singular": "",
      "template": "This Discount Factor makes a reward one step away worth {value} of a reward right now. This makes your agent {qualifier} about rewards far down the path.",
      "qualifiers": {"low": "care little", "middle": "care moderately", "high": "care a lot"},
      "source": "authored"
    }
  ]
}
)json";

enum class Band : std::uint8_t { Low, Middle, High };

struct Qualifiers {
  std::string low;
  std::string middle;
  std::string high;

  const std::string& operator[](Band b) const {
    switch (b) {
      case Band::Low: return low;
      case Band::Middle: return middle;
      case Band::High: return high;
    }
    return middle;
  }

  friend bool operator==(const Qualifiers&, const Qualifiers&) = default;
};

struct ParameterDescriptor {
  ParamId id{};
  std::string display_name;
  std::vector<double> legal_values;
  std::string unit;
  std::string unit_singular;
  std::string template_text;
  Qualifiers qualifiers;
  std::string source;  // "original" or "authored"

  // Thirds by position within the ordered legal set.
  Band band(double value) const {
    for (std::size_t i = 0; i < legal_values.size(); ++i) {
      if (legal_values[i] == value) {
        const std::size_t third = 3 * i / legal_values.size();
        return third == 0 ? Band::Low : third == 1 ? Band::Middle : Band::High;
      }
    }
    throw Error(ErrorCode::illegal_value, "value outside the legal set");
  }

  friend bool operator==(const ParameterDescriptor&, const ParameterDescriptor&) = default;
};

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(Span, Span) = default;
};

struct Explanation {
  ParamId parameter{};
  double value = 0;
  std::string rendered_text;
  std::vector<Span> emphasized_slots;  // byte ranges of filled slots
};

inline constexpr std::string_view kValueSlot = "{value}";
inline constexpr std::string_view kQualifierSlot = "{qualifier}";

namespace detail {

inline void check_template(const std::string& text, ParamId id) {
  std::string rest = text;
  for (auto slot : {kValueSlot, kQualifierSlot}) {
    for (auto pos = rest.find(slot); pos != std::string::npos; pos = rest.find(slot)) {
      rest.erase(pos, slot.size());
    }
  }
  if (rest.find('{') != std::string::npos || rest.find('}') != std::string::npos) {
    throw Error(ErrorCode::invalid_state, std::string("template for ") +
                                              std::string(to_string(id)) +
                                              " has an unknown slot");
  }
}

}  // namespace detail

inline std::vector<ParameterDescriptor> parse_catalog(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_state, std::string("catalog is not valid JSON: ") + e.what());
  }
  std::vector<ParameterDescriptor> out;
  try {
    for (const auto& rec : doc.at("parameters")) {
      ParameterDescriptor d;
      const auto name = rec.at("id").get<std::string>();
      const auto id = param_from_string(name);
      if (!id) throw Error(ErrorCode::invalid_state, "catalog names unknown parameter " + name);
      d.id = *id;
      d.display_name = rec.at("display_name").get<std::string>();
      d.legal_values = rec.at("values").get<std::vector<double>>();
      d.unit = rec.value("unit", "");
      d.unit_singular = rec.value("unit_singular", d.unit);
      d.template_text = rec.at("template").get<std::string>();
      const auto& q = rec.at("qualifiers");
      d.qualifiers = {q.at("low").get<std::string>(), q.at("middle").get<std::string>(),
                      q.at("high").get<std::string>()};
      d.source = rec.value("source", "authored");
      const auto engine_values = legal_values(d.id);
      if (!std::equal(d.legal_values.begin(), d.legal_values.end(), engine_values.begin(),
                      engine_values.end())) {
        throw Error(ErrorCode::invalid_state,
                    "catalog values for " + name + " differ from " + describe_legal_set(d.id));
      }
      detail::check_template(d.template_text, d.id);
      out.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_state, std::string("malformed catalog record: ") + e.what());
  }
  if (out.size() != kParamIds.size()) {
    throw Error(ErrorCode::invalid_state, "catalog must describe exactly five parameters");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].id != kParamIds[i]) {
      throw Error(ErrorCode::invalid_state, "catalog parameters are out of order");
    }
  }
  return out;
}

inline std::vector<ParameterDescriptor> load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read catalog " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_catalog(buf.str());
}

inline const std::vector<ParameterDescriptor>& catalog() {
  static const std::vector<ParameterDescriptor> builtin = parse_catalog(kDefaultCatalog);
  return builtin;
}

inline const ParameterDescriptor& descriptor(ParamId id,
                                             const std::vector<ParameterDescriptor>& from = catalog()) {
  for (const auto& d : from) {
    if (d.id == id) return d;
  }
  throw Error(ErrorCode::not_found, "no descriptor for " + std::string(to_string(id)));
}

inline Explanation render_madlib(const ParameterDescriptor& d, double value) {
  if (std::find(d.legal_values.begin(), d.legal_values.end(), value) == d.legal_values.end()) {
    throw Error(ErrorCode::illegal_value, d.display_name + " must be one of " +
                                              describe_legal_set(d.id) + ", got " +
                                              format_value(value));
  }
  std::string value_text = format_value(value);
  const std::string& unit = value == 1 ? d.unit_singular : d.unit;
  if (!unit.empty()) value_text += " " + unit;
  const std::string& qualifier = d.qualifiers[d.band(value)];

  Explanation e{d.id, value, {}, {}};
  const std::string& t = d.template_text;
  std::size_t i = 0;
  while (i < t.size()) {
    const std::string_view rest(t.data() + i, t.size() - i);
    const std::string* fill = nullptr;
    std::size_t consumed = 0;
    if (rest.starts_with(kValueSlot)) {
      fill = &value_text;
      consumed = kValueSlot.size();
    } else if (rest.starts_with(kQualifierSlot)) {
      fill = &qualifier;
      consumed = kQualifierSlot.size();
    }
    if (fill) {
      const std::size_t begin = e.rendered_text.size();
      e.rendered_text += *fill;
      e.emphasized_slots.push_back({begin, e.rendered_text.size()});
      i += consumed;
    } else {
      e.rendered_text += t[i++];
    }
  }
  return e;
}

inline Explanation render_madlib(ParamId id, double value) {
  return render_madlib(descriptor(id), value);
}

}  // namespace qube::explain
