#include "lgan/threads.hpp"

#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lgan {

namespace {
int g_threads = 0;
}

void set_threads(int n) {
    if (n < 0) n = 0;
    g_threads = n;
#ifdef _OPENMP
    omp_set_num_threads(n > 0 ? n : static_cast<int>(std::thread::hardware_concurrency()));
#endif
}

int threads() {
    if (g_threads > 0) return g_threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

} // namespace lgan
