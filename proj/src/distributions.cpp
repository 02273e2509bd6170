#include "myomap/distributions.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace myomap::dist {

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_two_sided_p(double z) {
    if (std::isinf(z)) {
        return 0.0;
    }
    return std::clamp(std::erfc(std::abs(z) / std::sqrt(2.0)), 0.0, 1.0);
}

double student_t_two_sided_p(double t, double dof) {
    if (std::isinf(t)) {
        return 0.0;
    }
    const boost::math::students_t_distribution<double> d(dof);
    return std::clamp(2.0 * boost::math::cdf(boost::math::complement(d, std::abs(t))), 0.0, 1.0);
}

}  // namespace myomap::dist
