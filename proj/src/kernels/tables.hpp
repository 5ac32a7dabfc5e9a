#pragma once

#include "subkalman/kernels.hpp"

namespace subkalman::kernels::detail {

extern const KernelTable kScalarTable;
#if defined(SUBKALMAN_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(SUBKALMAN_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

}  // namespace subkalman::kernels::detail
