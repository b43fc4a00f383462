#ifndef SHRINKT_SPECIAL_HPP
#define SHRINKT_SPECIAL_HPP

#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

/**
 * @file special.hpp
 *
 * @brief Gamma-family special functions and the regularized incomplete beta.
 */

namespace shrinkt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

inline void require_positive(double x, const char* fn) {
    if (!(x > 0)) {
        throw DomainError(std::string(fn) + ": argument must be positive, got " + std::to_string(x));
    }
}

// Below this argument the polygamma functions recurse upwards before using
// their asymptotic expansions; 10 keeps the truncated series below 1e-14.
inline constexpr double kAsymptoticThreshold = 10.0;

}

/**
 * @param x Positive argument.
 * @return ln Gamma(x).
 */
inline double log_gamma(double x) {
    detail::require_positive(x, "log_gamma");
    return std::lgamma(x);
}

/**
 * ln Gamma(a + 1/2) - ln Gamma(a). For large a the two log-gammas are huge
 * and nearly equal, so the difference is taken term by term in the
 * Stirling series instead.
 */
inline double log_gamma_ratio_half(double a) {
    detail::require_positive(a, "log_gamma_ratio_half");
    if (a < detail::kAsymptoticThreshold) {
        return std::lgamma(a + 0.5) - std::lgamma(a);
    }
    auto tail = [](double z) {
        const double r = 1 / (z * z);
        return (1.0 / 12 - r * (1.0 / 360 - r * (1.0 / 1260 - r * (1.0 / 1680 - r / 1188)))) / z;
    };
    return a * std::log1p(0.5 / a) + 0.5 * std::log(a) - 0.5 + (tail(a + 0.5) - tail(a));
}

inline double log_beta(double a, double b) {
    constexpr double log_gamma_half = 0.57236494292470008707; // ln sqrt(pi)
    if (b == 0.5 && a >= detail::kAsymptoticThreshold) {
        return log_gamma_half - log_gamma_ratio_half(a);
    }
    if (a == 0.5 && b >= detail::kAsymptoticThreshold) {
        return log_gamma_half - log_gamma_ratio_half(b);
    }
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/**
 * @param x Positive argument.
 * @return psi(x), the derivative of ln Gamma.
 */
inline double digamma(double x) {
    detail::require_positive(x, "digamma");
    double result = 0;
    while (x < detail::kAsymptoticThreshold) {
        result -= 1 / x;
        x += 1;
    }
    const double f = 1 / (x * x);
    const double series = f * (1.0 / 12 - f * (1.0 / 120 - f * (1.0 / 252 - f * (1.0 / 240 - f * (1.0 / 132)))));
    return result + std::log(x) - 0.5 / x - series;
}

/**
 * @param x Positive argument.
 * @return psi'(x).
 */
inline double trigamma(double x) {
    detail::require_positive(x, "trigamma");
    double result = 0;
    while (x < detail::kAsymptoticThreshold) {
        result += 1 / (x * x);
        x += 1;
    }
    const double f = 1 / (x * x);
    const double series = 1 / x + f / 2 + f / x * (1.0 / 6 - f * (1.0 / 30 - f * (1.0 / 42 - f * (1.0 / 30 - f * 5.0 / 66))));
    return result + series;
}

/**
 * @param x Positive argument.
 * @return psi''(x).
 */
inline double tetragamma(double x) {
    detail::require_positive(x, "tetragamma");
    double result = 0;
    while (x < detail::kAsymptoticThreshold) {
        result -= 2 / (x * x * x);
        x += 1;
    }
    const double f = 1 / (x * x);
    const double series = -f - f / x - f * f * (0.5 - f * (1.0 / 6 - f * (1.0 / 6 - f * (3.0 / 10 - f * 5.0 / 6))));
    return result + series;
}

/**
 * Solve trigamma(x) = y for x by Newton iteration, starting from the
 * large- and small-argument asymptotes.
 *
 * @param y Positive target value.
 * @return The unique positive x with trigamma(x) = y.
 */
inline double trigamma_inverse(double y) {
    detail::require_positive(y, "trigamma_inverse");
    if (y > 1e7) {
        return 1 / std::sqrt(y);
    }
    if (y < 1e-6) {
        return 1 / y;
    }

    double x = 0.5 + 1 / y;
    for (int iter = 0; iter < 100; ++iter) {
        const double tri = trigamma(x);
        const double step = tri * (1 - tri / y) / tetragamma(x);
        x += step;
        if (-step / x < 1e-14) {
            break;
        }
    }
    return x;
}

namespace detail {

// Modified Lentz evaluation of the incomplete beta continued fraction.
inline double beta_continued_fraction(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    constexpr int max_iter = 20000;

    const double qab = a + b;
    const double qap = a + 1;
    const double qam = a - 1;
    double c = 1;
    double d = 1 - qab * x / qap;
    if (std::abs(d) < tiny) {
        d = tiny;
    }
    d = 1 / d;
    double h = d;

    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1 + aa * d;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = 1 + aa / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1 + aa * d;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = 1 + aa / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1) < eps) {
            break;
        }
    }
    return h;
}

}

/**
 * Logarithm of the regularized incomplete beta function I_x(a, b).
 *
 * Both x and its complement y = 1 - x are passed so callers that know y
 * more accurately than 1 - x (e.g. t tail probabilities) keep full precision.
 */
inline double log_beta_inc(double x, double y, double log_x, double log_y, double a, double b) {
    detail::require_positive(a, "log_beta_inc");
    detail::require_positive(b, "log_beta_inc");
    if (!(x >= 0 && y >= 0)) {
        throw DomainError("log_beta_inc: x must lie in [0, 1]");
    }
    if (x <= 0) {
        return -kInf;
    }
    if (y <= 0) {
        return 0;
    }

    const double log_front = a * log_x + b * log_y - log_beta(a, b);
    if (x < (a + 1) / (a + b + 2)) {
        return log_front - std::log(a) + std::log(detail::beta_continued_fraction(x, a, b));
    }
    const double complement = std::exp(log_front - std::log(b)) * detail::beta_continued_fraction(y, b, a);
    return std::log1p(-complement);
}

/**
 * As above with ln x and ln y supplied by the caller, for arguments whose
 * logarithms are known more accurately than log(x) would give.
 */
inline double log_beta_inc(double x, double y, double a, double b) {
    return log_beta_inc(x, y, std::log(x), std::log(y), a, b);
}

inline double log_beta_inc(double x, double a, double b) {
    return log_beta_inc(x, 1 - x, a, b);
}

/**
 * @return The regularized incomplete beta function I_x(a, b).
 */
inline double beta_inc(double x, double a, double b) {
    return std::exp(log_beta_inc(x, 1 - x, a, b));
}

}

#endif
