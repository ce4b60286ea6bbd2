#include "lckasr/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace lckasr {

int worker_count() {
    static const int n = [] {
        int hw = int(std::thread::hardware_concurrency());
        if (hw < 1) hw = 1;
        if (const char* env = std::getenv("LCKASR_THREADS")) {
            const int cap = std::atoi(env);
            if (cap >= 1) hw = std::min(hw, cap);
        }
        return hw;
    }();
    return n;
}

}  // namespace lckasr
