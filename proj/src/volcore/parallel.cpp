#include "emseg/parallel.hpp"

#include <cstdlib>
#include <string>

namespace emseg {

std::size_t thread_count() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("EMSEG_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
        } catch (const std::exception&) {
            // unparsable values are ignored
        }
    }
    return n;
}

}  // namespace emseg
