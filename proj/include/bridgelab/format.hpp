#pragma once

#include <cstdio>
#include <string>

namespace bridgelab {

// All numeric output funnels through this one formatter. 17 significant
// digits round-trips any double, and a single code path keeps report files
// byte-identical across runs.
inline std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

}  // namespace bridgelab
