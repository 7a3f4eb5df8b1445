#include "hysmc/flow.hpp"

#include <cmath>

namespace hysmc {

namespace {
constexpr double kBlowupLimit = 1e12;
}

Integrator::Integrator(const HybridAutomaton& H, FlowConfig cfg) : H_(H), cfg_(cfg) {
    if (cfg_.substeps < 1) throw ValidationError("substeps must be at least 1");
    int n = H.dimension();
    k1_.resize(n);
    k2_.resize(n);
    k3_.resize(n);
    k4_.resize(n);
    tmp_.resize(n);
    inputs_.resize(H.inputs.size());
}

void Integrator::refresh_inputs(double local_time, double global_time) {
    if (inputs_.empty()) return;
    double model_time = (global_time + local_time) * H_.delta;
    for (std::size_t i = 0; i < inputs_.size(); i++)
        inputs_[i] = input_value(H_.inputs[i], model_time);
}

void Integrator::rhs(int mode, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    EvalEnv env{{x.data(), static_cast<std::size_t>(x.size())},
                {H_.parameter_values.data(), H_.parameter_values.size()},
                {inputs_.data(), inputs_.size()}};
    const Mode& m = H_.modes[mode];
    double scale = H_.delta;  // normalised time: dx/dtau = delta * F(x)
    for (int i = 0; i < x.size(); i++) dx[i] = scale * eval_expr(m.rhs[i], env, scratch_);
}

void Integrator::rk4_step(int mode, Eigen::VectorXd& x, double h, double local_time,
                          double global_time) {
    refresh_inputs(local_time, global_time);
    rhs(mode, x, k1_);
    tmp_ = x + (0.5 * h) * k1_;
    rhs(mode, tmp_, k2_);
    tmp_ = x + (0.5 * h) * k2_;
    rhs(mode, tmp_, k3_);
    tmp_ = x + h * k3_;
    rhs(mode, tmp_, k4_);
    x += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
}

void Integrator::check_state(const Eigen::VectorXd& x, int mode, double global_time) const {
    for (int i = 0; i < x.size(); i++) {
        double v = x[i];
        if (!std::isfinite(v) || std::fabs(v) > kBlowupLimit)
            throw FlowError("state blow-up during integration", mode, global_time * H_.delta);
    }
}

Eigen::VectorXd Integrator::flow_to(int mode, double t, const Eigen::VectorXd& v,
                                    double global_time) {
    if (!(t > 0.0) || t > 1.0 + 1e-12) throw ValidationError("flow time must lie in (0, 1]");
    double h = 1.0 / cfg_.substeps;
    // Number of whole grid steps below t; tolerate roundoff on exact grid hits.
    int full = static_cast<int>(std::floor(t * cfg_.substeps + 1e-9));
    if (full > cfg_.substeps) full = cfg_.substeps;
    Eigen::VectorXd x = v;
    for (int i = 0; i < full; i++) {
        rk4_step(mode, x, h, i * h, global_time);
        check_state(x, mode, global_time);
    }
    double rem = t - full * h;
    if (rem > 1e-12 / cfg_.substeps) {
        rk4_step(mode, x, rem, full * h, global_time);
        check_state(x, mode, global_time);
    }
    return x;
}

void Integrator::interval_states(int mode, const Eigen::VectorXd& v, double global_time,
                                 std::span<const double> times, Eigen::MatrixXd& out,
                                 Eigen::VectorXd* endpoint) {
    if (out.rows() != v.size() || out.cols() < static_cast<Eigen::Index>(times.size()))
        out.resize(v.size(), static_cast<Eigen::Index>(times.size()));
    double h = 1.0 / cfg_.substeps;
    Eigen::VectorXd x = v;  // state on the substep grid
    int grid = 0;           // number of grid steps taken
    for (std::size_t j = 0; j < times.size(); j++) {
        double t = times[j];
        if (j > 0 && !(times[j - 1] < t))
            throw ValidationError("interval_states times must be strictly increasing");
        if (!(t > 0.0) || !(t < 1.0))
            throw ValidationError("interval_states times must lie in (0, 1)");
        int full = static_cast<int>(std::floor(t * cfg_.substeps + 1e-9));
        if (full > cfg_.substeps) full = cfg_.substeps;
        while (grid < full) {
            rk4_step(mode, x, h, grid * h, global_time);
            check_state(x, mode, global_time);
            grid++;
        }
        double rem = t - full * h;
        if (rem > 1e-12 / cfg_.substeps) {
            // Shortened probe step off the grid; the grid state stays put.
            probe_ = x;
            rk4_step(mode, probe_, rem, full * h, global_time);
            check_state(probe_, mode, global_time);
            out.col(static_cast<Eigen::Index>(j)) = probe_;
        } else {
            out.col(static_cast<Eigen::Index>(j)) = x;
        }
    }
    if (endpoint != nullptr) {
        while (grid < cfg_.substeps) {
            rk4_step(mode, x, h, grid * h, global_time);
            check_state(x, mode, global_time);
            grid++;
        }
        *endpoint = x;
    }
}

void Integrator::interval_states(int mode, const Eigen::VectorXd& v, double global_time,
                                 std::span<const double> times, std::vector<Eigen::VectorXd>& out,
                                 Eigen::VectorXd* endpoint) {
    Eigen::MatrixXd cols;
    interval_states(mode, v, global_time, times, cols, endpoint);
    out.clear();
    out.reserve(times.size());
    for (std::size_t j = 0; j < times.size(); j++)
        out.push_back(cols.col(static_cast<Eigen::Index>(j)));
}

Eigen::VectorXd flow(const HybridAutomaton& H, int mode, double t, const Eigen::VectorXd& v,
                     double global_time, const FlowConfig& cfg) {
    Integrator integrator(H, cfg);
    return integrator.flow_to(mode, t, v, global_time);
}

std::vector<Eigen::VectorXd> flow_at_points(const HybridAutomaton& H, int mode,
                                            std::span<const double> times,
                                            const Eigen::VectorXd& v, double global_time,
                                            const FlowConfig& cfg) {
    Integrator integrator(H, cfg);
    std::vector<Eigen::VectorXd> out;
    integrator.interval_states(mode, v, global_time, times, out, nullptr);
    return out;
}

}  // namespace hysmc
