#pragma once

#include "commitissue/kernels.hpp"

namespace commitissue::kernels {

const KernelTable& scalar_table();
#if defined(COMMITISSUE_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(COMMITISSUE_HAVE_NEON)
const KernelTable& neon_table();
#endif

}  // namespace commitissue::kernels
