#pragma once

namespace msmilp {

// Number of workers for scenario fan-out and other parallel sweeps.
// MSMILP_THREADS, when set to a positive integer, caps the OpenMP default;
// anything unparsable is ignored. Always at least 1.
int worker_count();

} // namespace msmilp
