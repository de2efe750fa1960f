#pragma once

#include <cstddef>

namespace wrcp {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile function (inverse CDF), accurate to full double
/// precision via the Wichura AS241 rational approximations.
/// Returns -inf/+inf for p = 0/1; throws DataError outside [0,1].
double normal_quantile(double p);

/// ceil(x) that is robust to x sitting a few ulps above an integer, e.g.
/// safe_ceil(9.000000000000002) == 9.  Used for rank computations of the
/// form ceil(n * level) where level was produced by inexact division.
long long safe_ceil(double x);

}  // namespace wrcp
