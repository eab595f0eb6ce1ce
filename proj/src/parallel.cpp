#include "msgd_lab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace msgd_lab {

unsigned default_workers() {
  if (const char* env = std::getenv("MSGD_LAB_WORKERS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (...) {
      // fall through to the hardware default
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace msgd_lab
