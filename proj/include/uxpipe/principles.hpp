#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "uxpipe/error.hpp"

namespace uxpipe {

// The eight interface-design principles used as the defect taxonomy.
enum class DefectPrinciple { consistency, feedback, dialog, prevention, control, reversal, memory, hierarchy };

inline constexpr std::array<DefectPrinciple, 8> kAllPrinciples = {
    DefectPrinciple::consistency, DefectPrinciple::feedback, DefectPrinciple::dialog,
    DefectPrinciple::prevention,  DefectPrinciple::control,  DefectPrinciple::reversal,
    DefectPrinciple::memory,      DefectPrinciple::hierarchy};

NLOHMANN_JSON_SERIALIZE_ENUM(DefectPrinciple, {{DefectPrinciple::consistency, "consistency"},
                                               {DefectPrinciple::feedback, "feedback"},
                                               {DefectPrinciple::dialog, "dialog"},
                                               {DefectPrinciple::prevention, "prevention"},
                                               {DefectPrinciple::control, "control"},
                                               {DefectPrinciple::reversal, "reversal"},
                                               {DefectPrinciple::memory, "memory"},
                                               {DefectPrinciple::hierarchy, "hierarchy"}})

inline std::string to_string(DefectPrinciple p) { return nlohmann::json(p).get<std::string>(); }

// Capitalized name for report rows.
inline std::string display_name(DefectPrinciple p) {
  auto s = to_string(p);
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

inline DefectPrinciple principle_from_string(std::string_view s) {
  std::string lower(s);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (auto p : kAllPrinciples)
    if (to_string(p) == lower) return p;
  throw UsageError("unknown defect principle: " + std::string(s));
}

}  // namespace uxpipe
