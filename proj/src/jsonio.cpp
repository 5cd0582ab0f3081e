#include "saddle/jsonio.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace saddle {

namespace {

void dump(const nlohmann::json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<size_t>(indent) * (depth + 1), ' ');
  const std::string pad_close(static_cast<size_t>(indent) * depth, ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        out += nlohmann::json(it.key()).dump();
        out += ": ";
        dump(it.value(), out, indent, depth + 1);
      }
      out += "\n" + pad_close + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& el : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        dump(el, out, indent, depth + 1);
      }
      out += "\n" + pad_close + "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      // keep it a JSON float on round-trip
      std::string s(buf);
      if (s.find_first_of(".eE") == std::string::npos) out += ".0";
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump_json17(const nlohmann::json& j, int indent) {
  std::string out;
  dump(j, out, indent, 0);
  out += "\n";
  return out;
}

}  // namespace saddle
