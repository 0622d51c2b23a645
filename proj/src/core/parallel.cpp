#include "layerbokeh/core/parallel.hpp"

#include <cstdlib>
#include <string>

namespace layerbokeh {

int worker_count() {
  static const int count = [] {
    if (const char* env = std::getenv("LAYERBOKEH_THREADS")) {
      try {
        const int n = std::stoi(env);
        if (n >= 1) return n;
      } catch (...) {
      }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return count;
}

}  // namespace layerbokeh
