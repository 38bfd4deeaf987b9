#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "qpr/mathutil.hpp"

namespace qpr {

constexpr const char* kVersion = "0.1.0";

inline std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "missing";
    std::ostringstream ss;
    ss << in.rdbuf();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(ss.str())));
    return buf;
}

}  // namespace qpr
