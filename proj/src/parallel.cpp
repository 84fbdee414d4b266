#include "gvu/parallel.hpp"

#include <atomic>

namespace gvu {

namespace {
std::atomic<int> g_thread_cap{0};
}

void set_thread_cap(int threads) { g_thread_cap.store(threads < 0 ? 0 : threads); }

int thread_cap() { return g_thread_cap.load(); }

}  // namespace gvu
