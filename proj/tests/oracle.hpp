#pragma once

#include <fstream>

#include "json.hpp"

inline const nlohmann::json& oracle() {
  static const nlohmann::json j = [] {
    std::ifstream in(HJLAB_ORACLE_JSON);
    return nlohmann::json::parse(in);
  }();
  return j;
}
