#include "wrcp/parallel.hpp"

#include <cstdlib>
#include <string>

namespace wrcp {

unsigned resolve_jobs(int jobs) {
  if (jobs > 0) return static_cast<unsigned>(jobs);
  if (const char* env = std::getenv("WRCP_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

}  // namespace wrcp
