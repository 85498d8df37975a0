#pragma once

#include <cstdio>
#include <string>

namespace prophetlab {

// Plain decimal with `digits` significant digits, as used in every CSV the tools write.
inline std::string format_sig(double v, int digits = 9) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

}  // namespace prophetlab
