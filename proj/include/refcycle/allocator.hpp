#pragma once

// Personalized coupon allocation under a promotional budget.
//
// Demand follows q(x, v) = sigmoid(alpha(x) + (v - 0.15) beta^T x): alpha is a
// baseline propensity at the nominal 15% coupon and beta^T x the coupon
// sensitivity. Each day every customer receives the discount maximizing
// (1 - lambda v) q(x, v); lambda is raised by bisection until the expected
// redeemed discount fits the budget.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace refcycle::alloc {

inline constexpr double kPivot = 0.15;

/// Strictly increasing discount fractions in (0, 1).
class DiscountSet {
public:
    DiscountSet();  // {0.10, 0.12, 0.15, 0.17, 0.20}
    explicit DiscountSet(std::vector<double> values);

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double min() const { return values_.front(); }
    double max() const { return values_.back(); }
    /// Index of `v` up to 1e-9, if present.
    std::optional<std::size_t> find(double v) const;

private:
    std::vector<double> values_;
};

struct AllocationModel {
    double alpha_intercept = 0.0;
    std::vector<double> alpha_weights;
    std::vector<double> beta_weights;
    double pivot = kPivot;
    std::vector<std::string> feature_names;

    std::size_t dimension() const { return beta_weights.size(); }
    double alpha(std::span<const double> x) const;
    /// Coupon sensitivity beta^T x.
    double beta(std::span<const double> x) const;
    void validate() const;
};

struct CustomerRecord {
    std::string id;
    std::vector<double> features;
    /// Overrides the linear alpha model when present (e.g. a score from an external classifier).
    std::optional<double> alpha;
};

double sigmoid(double z);
double logit(double p);

double purchase_prob(const AllocationModel& model, std::span<const double> x, double discount);
double purchase_prob(const AllocationModel& model, const CustomerRecord& customer, double discount);

/// argmax over V of (1 - lambda v) q(x, v); ties go to the smaller discount.
double myopic_discount(const AllocationModel& model, const CustomerRecord& customer, double lambda,
                       const DiscountSet& discounts);
std::vector<double> myopic_assign(const AllocationModel& model, std::span<const CustomerRecord> customers,
                                  double lambda, const DiscountSet& discounts);

/// Expected discount paid out: sum_i v_i W q(x_i, v_i).
double projected_redemption(const AllocationModel& model, std::span<const CustomerRecord> customers,
                            std::span<const double> assignments, double basket_value);

/// Expected revenue after discounts per unit spend: sum_i (1 - v_i) W q(x_i, v_i).
double expected_revenue(const AllocationModel& model, std::span<const CustomerRecord> customers,
                        std::span<const double> assignments, double basket_value);

struct BudgetConfig {
    double basket_value = 1.0;  // W
    double budget = 0.0;        // B
    double lambda_low = 1.0;
    /// Defaults to 1 / min(V).
    std::optional<double> lambda_high;
    double tolerance = 1e-6;
    /// Times the upper end may double when it is still over budget.
    std::size_t max_extensions = 8;
};

struct TuneResult {
    double lambda = 1.0;
    double redemption = 0.0;
    std::size_t probes = 0;
    /// Share of customers with beta^T x < 0, for whom monotonicity in lambda is not guaranteed.
    double negative_sensitivity_rate = 0.0;
};

/// Smallest lambda >= lambda_low (to `tolerance`) whose projected redemption
/// fits the budget. Throws InfeasibleBudget if none does up to the extended upper end.
TuneResult tune_lambda(const AllocationModel& model, std::span<const CustomerRecord> customers,
                       const DiscountSet& discounts, const BudgetConfig& config);

// ---------------------------------------------------------------------------
// Estimation of beta with alpha held fixed.

/// Rows (x, v, y) with a known alpha(x) per row; features stored row-major.
struct BetaDesign {
    std::size_t dimension = 0;
    std::vector<double> features;
    std::vector<double> discounts;
    std::vector<int> purchased;
    std::vector<double> alpha;

    explicit BetaDesign(std::size_t dim = 0) : dimension(dim) {}
    std::size_t rows() const { return purchased.size(); }
    std::span<const double> row(std::size_t i) const { return {features.data() + i * dimension, dimension}; }
    void add(std::span<const double> x, double v, int y, double alpha_value);
};

struct FitOptions {
    std::size_t max_iterations = 500;
    /// Stop once the max-norm of the mean log-likelihood gradient is below this.
    double gradient_tolerance = 1e-8;
    double pivot = kPivot;
};

struct BetaFit {
    std::vector<double> beta;
    std::vector<double> standard_errors;
    double mean_log_likelihood = 0.0;
    double gradient_norm = 0.0;
    std::size_t iterations = 0;
};

/// Mean log-likelihood of y under sigmoid(alpha + (v - pivot) beta^T x).
double mean_log_likelihood(const BetaDesign& design, std::span<const double> beta, double pivot = kPivot);
std::vector<double> mean_gradient(const BetaDesign& design, std::span<const double> beta, double pivot = kPivot);

/// Newton's method with step halving. Throws ConvergenceError at the iteration cap.
BetaFit fit_beta(const BetaDesign& design, const FitOptions& options = {});

// ---------------------------------------------------------------------------
// Synthetic populations.

/// A static per-customer feature drawn uniformly from [low, high].
struct FeatureSpec {
    std::string name;
    double low = 0.0;
    double high = 1.0;
};

struct UniformPolicy {};
struct MyopicPolicy {
    AllocationModel model;
    double lambda = 1.0;
};
using CouponPolicy = std::variant<UniformPolicy, MyopicPolicy>;

struct SimulationSpec {
    std::size_t customers = 1000;
    std::size_t days = 30;
    std::vector<FeatureSpec> features;
    /// Name of the appended feature max{v_{t-m}, ..., v_{t-1}}, m = reference_memory.
    std::string reference_feature = "max_coupon_7d";
    std::size_t reference_memory = 7;
    DiscountSet discounts;
    /// Ground truth; its dimension is features.size() + 1 (reference feature last).
    AllocationModel truth;
    /// Standard deviation of daily Gaussian jitter added to static features.
    double feature_noise = 0.0;
    /// Unrecorded days simulated first so the reference window is always full.
    bool warm_up = true;
};

struct DatasetRow {
    std::size_t customer = 0;
    std::size_t day = 0;
    std::vector<double> x;
    double discount = 0.0;
    int purchased = 0;
};

struct Dataset {
    std::vector<std::string> feature_names;
    std::size_t reference_feature = 0;
    std::size_t reference_memory = 0;
    DiscountSet discounts;
    /// Sorted by customer, then day.
    std::vector<DatasetRow> rows;
};

/// Ten coupon-sensitivity features with the signs reported for the deployed
/// model (nine positive, the 7-day maximum coupon negative), on uniform
/// coupons over {0.12, 0.15, 0.17, 0.20}.
SimulationSpec standard_spec(std::size_t customers, std::size_t days);

Dataset simulate_population(const SimulationSpec& spec, const CouponPolicy& policy, std::uint64_t seed);

/// Design for fit_beta with alpha taken from `alpha_model`.
BetaDesign design_from(const Dataset& data, const AllocationModel& alpha_model);

struct CorrelationRow {
    std::size_t memory = 0;
    std::size_t rows = 0;
    /// Empty when either variable has zero variance.
    std::optional<double> corr_max;
    std::optional<double> corr_avg;
};

/// Pearson correlation of y with the max and with the mean of the previous
/// l coupons, skipping rows whose window is incomplete.
std::vector<CorrelationRow> reference_correlations(const Dataset& data, std::span<const std::size_t> memories);

struct MonotonicityRow {
    std::size_t memory = 0;
    /// Percent change in purchase rate, small reference vs large reference,
    /// for current coupon in the small group and in the large group.
    double small_current = 0.0;
    double large_current = 0.0;
};

struct CouponGroups {
    std::vector<double> small{0.12, 0.15};
    std::vector<double> large{0.17, 0.20};
};

/// Throws ValidationError when a conditioning cell is empty or its large-reference cell has no purchases.
std::vector<MonotonicityRow> monotonicity_table(const Dataset& data, std::span<const std::size_t> memories,
                                                const CouponGroups& groups = {});

/// Share of customers who get the same coupon on at least `run` consecutive days.
double repeated_run_share(const Dataset& data, std::size_t run);

}  // namespace refcycle::alloc
