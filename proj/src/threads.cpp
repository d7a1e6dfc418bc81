#include "msmilp/threads.hpp"

#include <algorithm>
#include <cstdlib>

#include <omp.h>

namespace msmilp {

int worker_count() {
    int workers = std::max(1, omp_get_max_threads());
    if (const char* env = std::getenv("MSMILP_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1)
            workers = static_cast<int>(std::min<long>(workers, cap));
    }
    return workers;
}

} // namespace msmilp
