#pragma once

namespace revswitch {

/// Principal branch W0 of the Lambert function, x >= -1/e.
double lambert_w0(double x);

/// W0(exp(t)) without forming exp(t); valid for every finite t.
double lambert_w0_exp(double t);

} // namespace revswitch
