#pragma once

namespace myomap::dist {

double normal_cdf(double z);
/// Inverse standard normal CDF, p in (0, 1).
double normal_quantile(double p);
/// Two-sided p-value of |Z| >= |z|.
double normal_two_sided_p(double z);
/// Two-sided p-value of |T| >= |t| for Student-t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

}  // namespace myomap::dist
