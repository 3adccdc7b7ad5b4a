#ifndef MAAR_DISTRIBUTIONS_HPP
#define MAAR_DISTRIBUTIONS_HPP

namespace maar {

// 1 / (1 + exp(-x)); saturates to 0 or 1 without producing NaN.
double inv_logit(double x);

// log(1 + exp(x)) without overflow.
double log1p_exp(double x);

double normal_cdf(double x);
double normal_sf(double x);
double normal_quantile(double p);

// Upper-tail probability of a chi-square(df) variable.
double chisq_sf(double x, int df);

// Upper-tail probability of F(d1, d2). d2 may be +infinity (limit chi-square(d1) / d1).
double f_sf(double x, double d1, double d2);

} // namespace maar

#endif
