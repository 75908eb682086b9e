#pragma once

namespace lgan {

// Thread count for the OpenMP kernels. 0 means hardware concurrency.
// Results are bit-identical for every setting; this only affects speed.
void set_threads(int n);
int threads();

} // namespace lgan
