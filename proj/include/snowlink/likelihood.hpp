#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "snowlink/link_model.hpp"
#include "snowlink/patterns.hpp"

namespace snowlink {

enum class LikTerm { Full1, Cond1, Binom12, Mult, Full2, Cond2 };

std::string_view to_string(LikTerm term);

// Dropped constants: Full1 and Mult use (tau1 - m) ln(1 - n/N), i.e. the
// multinomial's tau1 ln(1 - n/N) minus the data-only m ln(1 - n/N); this keeps
// n = N finite at tau1 = m. All terms drop ln of observed-count factorials.
// With these conventions Full1 == Cond1 + Binom12 + Mult exactly.
struct LogLikTerms {
  double value = 0.0;
  std::vector<double> grad;
  LikTerm which = LikTerm::Full1;
};

inline constexpr double kProbabilityFloor = 1e-300;

LogLikTerms loglik_full_1(const SampleData& data, double tau1, std::span<const double> theta,
                          const LinkModel& model);
LogLikTerms loglik_cond_1(const SampleData& data, std::span<const double> theta, const LinkModel& model);
LogLikTerms loglik_binom_12(const SampleData& data, double tau1, std::span<const double> theta,
                            const LinkModel& model);
LogLikTerms loglik_mult(const SampleData& data, double tau1, const LinkModel& model);
LogLikTerms loglik_2(const SampleData& data, double tau2, std::span<const double> theta, const LinkModel& model,
                     bool conditional);

}  // namespace snowlink
