#pragma once

namespace sandkit {

// log I_nu(x), the modified Bessel function of the first kind, for nu >= 0 and
// x >= 0. Evaluated in log space so it stays finite where I_nu overflows
// (x in the thousands) or underflows (large nu, small x). Returns -inf at
// x = 0 for nu > 0 and 0 at x = 0 for nu = 0.
double log_bessel_i(double nu, double x);

}  // namespace sandkit
