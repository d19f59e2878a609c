#include "refcycle/allocator.hpp"

#include "refcycle/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace refcycle::alloc {

namespace {

constexpr double kMatchTolerance = 1e-9;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

bool in_group(double v, const std::vector<double>& group) {
    return std::any_of(group.begin(), group.end(), [&](double g) { return std::abs(g - v) <= kMatchTolerance; });
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const auto n = static_cast<double>(a.size());
    if (a.size() < 2) return std::nullopt;
    const auto [alo, ahi] = std::minmax_element(a.begin(), a.end());
    const auto [blo, bhi] = std::minmax_element(b.begin(), b.end());
    if (*alo == *ahi || *blo == *bhi) return std::nullopt;
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

/// Visits each customer's rows as a contiguous [begin, end) range.
template <class F>
void for_each_customer(const Dataset& data, F&& f) {
    std::size_t begin = 0;
    while (begin < data.rows.size()) {
        std::size_t end = begin + 1;
        while (end < data.rows.size() && data.rows[end].customer == data.rows[begin].customer) ++end;
        f(begin, end);
        begin = end;
    }
}

/// Calls f(row, window) for every row whose previous `memory` days are all present.
template <class F>
void for_each_window(const Dataset& data, std::size_t memory, F&& f) {
    std::vector<double> window(memory);
    for_each_customer(data, [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin + memory; t < end; ++t) {
            if (data.rows[t - memory].day + memory != data.rows[t].day) continue;
            for (std::size_t k = 0; k < memory; ++k) window[k] = data.rows[t - memory + k].discount;
            f(data.rows[t], std::span<const double>(window));
        }
    });
}

}  // namespace

DiscountSet::DiscountSet() : values_{0.10, 0.12, 0.15, 0.17, 0.20} {}

DiscountSet::DiscountSet(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ValidationError("discount set is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!(values_[i] > 0.0 && values_[i] < 1.0)) throw ValidationError("discounts must lie in (0, 1)");
        if (i > 0 && !(values_[i - 1] < values_[i])) throw ValidationError("discounts must be strictly increasing");
    }
}

std::optional<std::size_t> DiscountSet::find(double v) const {
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (std::abs(values_[i] - v) <= kMatchTolerance) return i;
    return std::nullopt;
}

double AllocationModel::alpha(std::span<const double> x) const {
    if (alpha_weights.empty()) return alpha_intercept;
    return alpha_intercept + dot(alpha_weights, x);
}

double AllocationModel::beta(std::span<const double> x) const { return dot(beta_weights, x); }

void AllocationModel::validate() const {
    if (!alpha_weights.empty() && alpha_weights.size() != beta_weights.size())
        throw ValidationError("alpha and beta weights differ in length");
    if (!feature_names.empty() && feature_names.size() != beta_weights.size())
        throw ValidationError("feature names and beta weights differ in length");
    auto finite = [](double w) { return std::isfinite(w); };
    if (!std::isfinite(alpha_intercept) || !std::isfinite(pivot) ||
        !std::all_of(alpha_weights.begin(), alpha_weights.end(), finite) ||
        !std::all_of(beta_weights.begin(), beta_weights.end(), finite))
        throw ValidationError("model weights must be finite");
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double purchase_prob(const AllocationModel& model, std::span<const double> x, double discount) {
    return sigmoid(model.alpha(x) + (discount - model.pivot) * model.beta(x));
}

double purchase_prob(const AllocationModel& model, const CustomerRecord& customer, double discount) {
    if (customer.features.size() != model.dimension())
        throw ValidationError("customer '" + customer.id + "' has the wrong feature dimension");
    const double a = customer.alpha ? *customer.alpha : model.alpha(customer.features);
    return sigmoid(a + (discount - model.pivot) * model.beta(customer.features));
}

double myopic_discount(const AllocationModel& model, const CustomerRecord& customer, double lambda,
                       const DiscountSet& discounts) {
    double best_v = discounts.min();
    double best = -std::numeric_limits<double>::infinity();
    for (double v : discounts.values()) {
        const double value = (1.0 - lambda * v) * purchase_prob(model, customer, v);
        if (value > best) {
            best = value;
            best_v = v;
        }
    }
    return best_v;
}

std::vector<double> myopic_assign(const AllocationModel& model, std::span<const CustomerRecord> customers,
                                  double lambda, const DiscountSet& discounts) {
    std::vector<double> out;
    out.reserve(customers.size());
    for (const auto& c : customers) out.push_back(myopic_discount(model, c, lambda, discounts));
    return out;
}

double projected_redemption(const AllocationModel& model, std::span<const CustomerRecord> customers,
                            std::span<const double> assignments, double basket_value) {
    if (assignments.size() != customers.size()) throw ValidationError("one assignment per customer is required");
    double total = 0.0;
    for (std::size_t i = 0; i < customers.size(); ++i)
        total += assignments[i] * basket_value * purchase_prob(model, customers[i], assignments[i]);
    return total;
}

double expected_revenue(const AllocationModel& model, std::span<const CustomerRecord> customers,
                        std::span<const double> assignments, double basket_value) {
    if (assignments.size() != customers.size()) throw ValidationError("one assignment per customer is required");
    double total = 0.0;
    for (std::size_t i = 0; i < customers.size(); ++i)
        total += (1.0 - assignments[i]) * basket_value * purchase_prob(model, customers[i], assignments[i]);
    return total;
}

TuneResult tune_lambda(const AllocationModel& model, std::span<const CustomerRecord> customers,
                       const DiscountSet& discounts, const BudgetConfig& config) {
    if (!(config.basket_value > 0.0)) throw ValidationError("basket value W must be positive");
    if (!(config.budget >= 0.0)) throw ValidationError("budget B must be nonnegative");
    if (!(config.tolerance > 0.0)) throw ValidationError("tolerance must be positive");
    double hi = config.lambda_high.value_or(1.0 / discounts.min());
    double lo = config.lambda_low;
    if (!(lo <= hi)) throw ValidationError("lambda bounds are out of order");

    TuneResult out;
    if (!customers.empty()) {
        std::size_t negative = 0;
        for (const auto& c : customers)
            if (model.beta(c.features) < 0.0) ++negative;
        out.negative_sensitivity_rate = static_cast<double>(negative) / static_cast<double>(customers.size());
    }
    auto redemption = [&](double lambda) {
        ++out.probes;
        return projected_redemption(model, customers, myopic_assign(model, customers, lambda, discounts),
                                    config.basket_value);
    };

    out.redemption = redemption(lo);
    out.lambda = lo;
    if (out.redemption <= config.budget) return out;

    double at_hi = redemption(hi);
    for (std::size_t ext = 0; at_hi > config.budget && ext < config.max_extensions; ++ext) {
        lo = hi;
        hi *= 2.0;
        at_hi = redemption(hi);
    }
    if (at_hi > config.budget)
        throw InfeasibleBudget("projected redemption " + std::to_string(at_hi) + " exceeds budget " +
                               std::to_string(config.budget) + " at lambda " + std::to_string(hi));

    while (hi - lo > config.tolerance) {
        const double mid = lo + (hi - lo) / 2.0;
        const double r = redemption(mid);
        if (r <= config.budget) {
            hi = mid;
            at_hi = r;
        } else {
            lo = mid;
        }
    }
    out.lambda = hi;
    out.redemption = at_hi;
    return out;
}

void BetaDesign::add(std::span<const double> x, double v, int y, double alpha_value) {
    if (x.size() != dimension) throw ValidationError("design row has the wrong dimension");
    if (y != 0 && y != 1) throw ValidationError("purchase indicator must be 0 or 1");
    features.insert(features.end(), x.begin(), x.end());
    discounts.push_back(v);
    purchased.push_back(y);
    alpha.push_back(alpha_value);
}

double mean_log_likelihood(const BetaDesign& design, std::span<const double> beta, double pivot) {
    double total = 0.0;
    for (std::size_t i = 0; i < design.rows(); ++i) {
        const double eta = design.alpha[i] + (design.discounts[i] - pivot) * dot(beta, design.row(i));
        total += design.purchased[i] ? -softplus(-eta) : -softplus(eta);
    }
    return design.rows() ? total / static_cast<double>(design.rows()) : 0.0;
}

std::vector<double> mean_gradient(const BetaDesign& design, std::span<const double> beta, double pivot) {
    std::vector<double> g(design.dimension, 0.0);
    for (std::size_t i = 0; i < design.rows(); ++i) {
        const auto x = design.row(i);
        const double z = design.discounts[i] - pivot;
        const double resid = design.purchased[i] - sigmoid(design.alpha[i] + z * dot(beta, x));
        for (std::size_t j = 0; j < design.dimension; ++j) g[j] += resid * z * x[j];
    }
    if (design.rows())
        for (double& v : g) v /= static_cast<double>(design.rows());
    return g;
}

BetaFit fit_beta(const BetaDesign& design, const FitOptions& options) {
    const std::size_t p = design.dimension;
    const std::size_t n = design.rows();
    if (n == 0 || p == 0) throw ValidationError("fit_beta needs at least one row and one feature");
    const double inv_n = 1.0 / static_cast<double>(n);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    auto view = [&](const Eigen::VectorXd& b) { return std::span<const double>(b.data(), p); };
    Eigen::MatrixXd hessian(p, p);  // negative Hessian of the mean log-likelihood

    auto derivatives = [&](const Eigen::VectorXd& b, Eigen::VectorXd& grad) {
        grad.setZero(static_cast<Eigen::Index>(p));
        hessian.setZero();
        Eigen::VectorXd z(static_cast<Eigen::Index>(p));
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = design.row(i);
            const double s = design.discounts[i] - options.pivot;
            for (std::size_t j = 0; j < p; ++j) z[static_cast<Eigen::Index>(j)] = s * x[j];
            const double q = sigmoid(design.alpha[i] + z.dot(b));
            grad += (design.purchased[i] - q) * z;
            hessian.selfadjointView<Eigen::Lower>().rankUpdate(z, q * (1.0 - q));
        }
        grad *= inv_n;
        hessian = hessian.selfadjointView<Eigen::Lower>();
        hessian *= inv_n;
    };

    BetaFit out;
    Eigen::VectorXd grad;
    double ll = mean_log_likelihood(design, view(beta), options.pivot);
    for (std::size_t iter = 0;; ++iter) {
        derivatives(beta, grad);
        const double gnorm = grad.cwiseAbs().maxCoeff();
        if (gnorm <= options.gradient_tolerance) {
            out.iterations = iter;
            out.gradient_norm = gnorm;
            break;
        }
        if (iter >= options.max_iterations)
            throw ConvergenceError("fit_beta did not converge in " + std::to_string(options.max_iterations) +
                                   " iterations (gradient " + std::to_string(gnorm) + ")");
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
        Eigen::VectorXd step = ldlt.solve(grad);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) step = grad;

        double t = 1.0;
        bool improved = false;
        for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
            const Eigen::VectorXd trial = beta + t * step;
            const double trial_ll = mean_log_likelihood(design, view(trial), options.pivot);
            if (trial_ll >= ll) {
                beta = trial;
                ll = trial_ll;
                improved = true;
                break;
            }
        }
        if (!improved) {
            // No representable ascent left; the gradient test above decides convergence.
            out.iterations = iter + 1;
            out.gradient_norm = gnorm;
            if (gnorm > options.gradient_tolerance)
                throw ConvergenceError("fit_beta stalled with gradient " + std::to_string(gnorm));
            break;
        }
    }

    out.beta.assign(beta.data(), beta.data() + p);
    out.mean_log_likelihood = ll;
    const Eigen::MatrixXd cov = (hessian * static_cast<double>(n)).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    out.standard_errors.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        const double var = cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
        out.standard_errors[j] = var > 0.0 ? std::sqrt(var) : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

SimulationSpec standard_spec(std::size_t customers, std::size_t days) {
    SimulationSpec spec;
    spec.customers = customers;
    spec.days = days;
    spec.features = {
        {"emails_clicked_28d", 0.0, 3.0},
        {"cart_visits_3d", 0.0, 2.0},
        {"cart_visits_7d", 0.0, 4.0},
        {"avg_site_sale_discount_cart", 0.0, 0.3},
        {"pct_orders_with_coupon_hist", 0.0, 1.0},
        {"coupon_use_pct_30d", 0.0, 1.0},
        {"coupon_use_pct_hist", 0.0, 1.0},
        {"avg_clicked_coupon_7d", 0.0, 0.3},
        {"avg_clicked_coupon_30d", 0.0, 0.3},
    };
    spec.reference_feature = "max_coupon_7d";
    spec.reference_memory = 7;
    spec.discounts = DiscountSet({0.12, 0.15, 0.17, 0.20});

    AllocationModel& m = spec.truth;
    m.alpha_intercept = 0.5;
    m.alpha_weights = {0.10, 0.30, 0.10, 1.0, 0.20, 0.20, 0.20, 1.0, 1.0, -15.0};
    m.beta_weights = {4.0, 6.0, 3.0, 30.0, 8.0, 8.0, 8.0, 30.0, 30.0, -120.0};
    for (const auto& f : spec.features) m.feature_names.push_back(f.name);
    m.feature_names.push_back(spec.reference_feature);
    return spec;
}

Dataset simulate_population(const SimulationSpec& spec, const CouponPolicy& policy, std::uint64_t seed) {
    const std::size_t dim = spec.features.size() + 1;
    spec.truth.validate();
    if (spec.truth.dimension() != dim)
        throw ValidationError("ground-truth model needs one weight per feature plus the reference feature");
    if (spec.reference_memory == 0) throw ValidationError("reference memory must be positive");
    if (const auto* my = std::get_if<MyopicPolicy>(&policy)) {
        my->model.validate();
        if (my->model.dimension() != dim) throw ValidationError("policy model has the wrong feature dimension");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, spec.discounts.size() - 1);

    Dataset out;
    for (const auto& f : spec.features) out.feature_names.push_back(f.name);
    out.feature_names.push_back(spec.reference_feature);
    out.reference_feature = dim - 1;
    out.reference_memory = spec.reference_memory;
    out.discounts = spec.discounts;
    out.rows.reserve(spec.customers * spec.days);

    const std::size_t warm = spec.warm_up ? spec.reference_memory : 0;
    std::vector<double> base(spec.features.size());
    std::vector<double> x(dim);
    std::vector<double> history;
    for (std::size_t i = 0; i < spec.customers; ++i) {
        for (std::size_t j = 0; j < base.size(); ++j)
            base[j] = spec.features[j].low + (spec.features[j].high - spec.features[j].low) * unit(rng);
        history.clear();
        for (std::size_t day = 0; day < warm + spec.days; ++day) {
            for (std::size_t j = 0; j < base.size(); ++j)
                x[j] = spec.feature_noise > 0.0 ? base[j] + spec.feature_noise * jitter(rng) : base[j];
            double ref = 0.0;
            const std::size_t from = history.size() > spec.reference_memory ? history.size() - spec.reference_memory : 0;
            for (std::size_t k = from; k < history.size(); ++k) ref = std::max(ref, history[k]);
            x[dim - 1] = ref;

            double v = 0.0;
            if (std::holds_alternative<UniformPolicy>(policy)) {
                v = spec.discounts.values()[pick(rng)];
            } else {
                const auto& my = std::get<MyopicPolicy>(policy);
                v = myopic_discount(my.model, CustomerRecord{{}, x, std::nullopt}, my.lambda, spec.discounts);
            }
            const int y = unit(rng) < purchase_prob(spec.truth, x, v) ? 1 : 0;
            history.push_back(v);
            if (day >= warm) out.rows.push_back({i, day - warm, x, v, y});
        }
    }
    return out;
}

BetaDesign design_from(const Dataset& data, const AllocationModel& alpha_model) {
    BetaDesign d(data.feature_names.size());
    d.features.reserve(data.rows.size() * d.dimension);
    for (const auto& r : data.rows) d.add(r.x, r.discount, r.purchased, alpha_model.alpha(r.x));
    return d;
}

std::vector<CorrelationRow> reference_correlations(const Dataset& data, std::span<const std::size_t> memories) {
    std::vector<CorrelationRow> out;
    for (std::size_t memory : memories) {
        if (memory == 0) throw ValidationError("memory lengths must be positive");
        std::vector<double> ys, maxes, means;
        for_each_window(data, memory, [&](const DatasetRow& row, std::span<const double> w) {
            ys.push_back(row.purchased);
            maxes.push_back(*std::max_element(w.begin(), w.end()));
            means.push_back(std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(memory));
        });
        out.push_back({memory, ys.size(), pearson(maxes, ys), pearson(means, ys)});
    }
    return out;
}

std::vector<MonotonicityRow> monotonicity_table(const Dataset& data, std::span<const std::size_t> memories,
                                                const CouponGroups& groups) {
    std::vector<MonotonicityRow> out;
    for (std::size_t memory : memories) {
        if (memory == 0) throw ValidationError("memory lengths must be positive");
        // [current group][reference group] -> (rows, purchases)
        double count[2][2] = {};
        double buys[2][2] = {};
        for_each_window(data, memory, [&](const DatasetRow& row, std::span<const double> w) {
            const double ref = *std::max_element(w.begin(), w.end());
            const int cur = in_group(row.discount, groups.small) ? 0 : in_group(row.discount, groups.large) ? 1 : -1;
            const int rg = in_group(ref, groups.small) ? 0 : in_group(ref, groups.large) ? 1 : -1;
            if (cur < 0 || rg < 0) return;
            count[cur][rg] += 1.0;
            buys[cur][rg] += row.purchased;
        });
        double pct[2];
        for (int cur = 0; cur < 2; ++cur) {
            for (int rg = 0; rg < 2; ++rg)
                if (count[cur][rg] == 0.0 || buys[cur][rg] == 0.0)
                    throw ValidationError("monotonicity cell (memory " + std::to_string(memory) + ", " +
                                          (cur ? "large" : "small") + " coupon, " + (rg ? "large" : "small") +
                                          " reference) has no purchases");
            pct[cur] = 100.0 * ((buys[cur][0] / count[cur][0]) / (buys[cur][1] / count[cur][1]) - 1.0);
        }
        out.push_back({memory, pct[0], pct[1]});
    }
    return out;
}

double repeated_run_share(const Dataset& data, std::size_t run) {
    if (run == 0) throw ValidationError("run length must be positive");
    std::size_t customers = 0;
    std::size_t repeating = 0;
    for_each_customer(data, [&](std::size_t begin, std::size_t end) {
        ++customers;
        std::size_t len = 1;
        bool hit = run == 1;
        for (std::size_t t = begin + 1; t < end && !hit; ++t) {
            const bool same = data.rows[t].day == data.rows[t - 1].day + 1 &&
                              std::abs(data.rows[t].discount - data.rows[t - 1].discount) <= kMatchTolerance;
            len = same ? len + 1 : 1;
            hit = len >= run;
        }
        if (hit) ++repeating;
    });
    return customers ? static_cast<double>(repeating) / static_cast<double>(customers) : 0.0;
}

}  // namespace refcycle::alloc
