#include "sqra/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace sqra {

namespace {

double l1_norm(std::span<const double> v, const Mesh& mesh) {
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += mesh.measures[k] * std::abs(v[k]);
    return s;
}

std::size_t find_time(const std::vector<double>& times, double t) {
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    auto it = std::lower_bound(times.begin(), times.end(), t - tol);
    if (it == times.end() || std::abs(*it - t) > tol) return times.size();
    return static_cast<std::size_t>(it - times.begin());
}

struct LineFit {
    double slope, intercept, r_squared;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DegenerateInput("least squares: abscissae are all equal");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

std::string header(const std::string& config_hash, const char* columns) {
    std::string s;
    if (!config_hash.empty()) s += "# config=" + config_hash + "\n";
    s += columns;
    s += '\n';
    return s;
}

}  // namespace

std::vector<double> project_to_coarse(std::span<const double> fine_values, const Mesh& coarse, const Mesh& fine) {
    if (coarse.dimension != 1 || fine.dimension != 1) throw NonNestedMeshes("projection needs uniform 1D meshes");
    const std::size_t nc = coarse.num_cells();
    const std::size_t nf = fine.num_cells();
    if (fine_values.size() != nf) throw DimensionMismatch("project_to_coarse: fine value count");
    if (nc == 0 || nf < nc || nf % nc != 0) {
        throw NonNestedMeshes("fine mesh (" + std::to_string(nf) + " cells) is not a refinement of the coarse mesh (" +
                              std::to_string(nc) + " cells)");
    }
    const double scale = std::max(1.0, std::abs(coarse.domain_measure));
    auto same = [&](double a, double b) { return std::abs(a - b) <= 1e-12 * scale; };
    if (!same(coarse.cell_vertices.front()[0][0], fine.cell_vertices.front()[0][0]) ||
        !same(coarse.cell_vertices.back()[1][0], fine.cell_vertices.back()[1][0])) {
        throw NonNestedMeshes("meshes cover different intervals");
    }
    const std::size_t ratio = nf / nc;
    if (ratio == 1) return {fine_values.begin(), fine_values.end()};
    std::vector<double> out(nc);
    for (std::size_t K = 0; K < nc; ++K) {
        double mass = 0.0;
        double measure = 0.0;
        for (std::size_t j = K * ratio; j < (K + 1) * ratio; ++j) {
            mass += fine.measures[j] * fine_values[j];
            measure += fine.measures[j];
        }
        out[K] = mass / measure;
    }
    return out;
}

double error_linf_l1(const Trajectory& run, const Trajectory& reference, const Mesh& coarse, const Mesh& fine) {
    if (run.times.empty()) throw TimeGridMismatch("run trajectory is empty");
    double worst = 0.0;
    double norm = 0.0;
    std::vector<double> diff(coarse.num_cells());
    for (std::size_t n = 0; n < run.times.size(); ++n) {
        const std::size_t m = find_time(reference.times, run.times[n]);
        if (m == reference.times.size()) {
            throw TimeGridMismatch("reference has no state at t = " + csv_number(run.times[n]));
        }
        if (run.states[n].size() != coarse.num_cells()) throw DimensionMismatch("run state size");
        const std::vector<double> projected = project_to_coarse(reference.states[m], coarse, fine);
        for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = projected[k] - run.states[n][k];
        worst = std::max(worst, l1_norm(diff, coarse));
        norm = std::max(norm, l1_norm(projected, coarse));
    }
    if (norm == 0.0) {
        if (worst == 0.0) return 0.0;
        throw DegenerateInput("reference trajectory vanishes identically");
    }
    return worst / norm;
}

double observed_order(std::span<const double> errors, std::span<const double> sizes) {
    if (errors.size() != sizes.size()) throw DimensionMismatch("observed_order: errors and sizes differ in length");
    if (errors.size() < 2) throw DegenerateInput("observed_order needs at least two (error, size) pairs");
    std::vector<double> x(sizes.size()), y(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!(errors[i] > 0.0) || !(sizes[i] > 0.0)) throw DegenerateInput("observed_order: nonpositive entry");
        x[i] = std::log(sizes[i]);
        y[i] = std::log(errors[i]);
    }
    return least_squares(x, y).slope;
}

double steady_state_distance(std::span<const double> state, std::span<const double> steady, const Mesh& mesh) {
    if (state.size() != mesh.num_cells() || steady.size() != mesh.num_cells()) {
        throw DimensionMismatch("steady_state_distance: size mismatch");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < state.size(); ++k) {
        const double d = state[k] - steady[k];
        s += mesh.measures[k] * d * d;
    }
    return std::sqrt(s);
}

DecayFit decay_rate_fit(std::span<const std::pair<double, double>> series, double t_begin, double t_end) {
    std::vector<double> t, logd;
    for (const auto& [time, dist] : series) {
        if (time < t_begin || time > t_end) continue;
        if (!(dist > 0.0)) {
            throw DegenerateInput("decay_rate_fit: nonpositive distance at t = " + csv_number(time));
        }
        t.push_back(time);
        logd.push_back(std::log(dist));
    }
    if (t.size() < 2) throw DegenerateInput("decay_rate_fit: fewer than two samples in the window");
    const LineFit fit = least_squares(t, logd);
    return {fit.slope, fit.intercept, fit.r_squared, t.size()};
}

void ReportRecorder::on_start(const State& initial) {
    ledger_.record_initial(initial.rho_cell, mesh_, data_, initial.time);
    report_.initial_energy = ledger_.total().front();
    report_.n_cells = mesh_.num_cells();
    report_.epsilon = data_.epsilon;
}

void ReportRecorder::on_step(const StepEvent& e) {
    ledger_.record_step(e.state, e.flux, mesh_, data_, e.tau);
    const std::size_t n = ledger_.size() - 1;
    report_.time.push_back(e.state.time);
    report_.bulk_energy.push_back(ledger_.bulk()[n]);
    report_.total_energy.push_back(ledger_.total()[n]);
    report_.primal.push_back(ledger_.primal()[n]);
    report_.dual.push_back(ledger_.dual()[n]);
    report_.inequality_residual.push_back(ledger_.inequality_residual()[n]);
    report_.newton_iters.push_back(e.stats.newton_iters);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string energy_csv(const RunReport& r) {
    std::string s = header(r.config_hash, "time,NRG_tot,NRG_int,D_primal,D_dual,ineq_residual");
    for (std::size_t n = 0; n < r.time.size(); ++n) {
        s += csv_number(r.time[n]) + ',' + csv_number(r.total_energy[n]) + ',' + csv_number(r.bulk_energy[n]) + ',' +
             csv_number(r.primal[n]) + ',' + csv_number(r.dual[n]) + ',' + csv_number(r.inequality_residual[n]) +
             '\n';
    }
    return s;
}

std::string newton_csv(const RunReport& r) {
    std::string s = header(r.config_hash, "time,iterations");
    for (std::size_t n = 0; n < r.time.size(); ++n) {
        s += csv_number(r.time[n]) + ',' + std::to_string(r.newton_iters[n]) + '\n';
    }
    return s;
}

std::string error_csv(std::span<const std::pair<std::size_t, double>> rows, const std::string& config_hash) {
    std::string s = header(config_hash, "NbCells,errLinfL1");
    for (const auto& [cells, err] : rows) s += std::to_string(cells) + ',' + csv_number(err) + '\n';
    return s;
}

std::string longtime_csv(std::span<const std::pair<double, double>> series, const std::string& config_hash) {
    std::string s = header(config_hash, "time,errL2");
    for (const auto& [t, d] : series) s += csv_number(t) + ',' + csv_number(d) + '\n';
    return s;
}

std::string snapshot_csv(const Trajectory& snapshots, const std::string& config_hash) {
    std::string s = header(config_hash, "time,cell_index,rho");
    for (std::size_t n = 0; n < snapshots.times.size(); ++n) {
        const std::string t = csv_number(snapshots.times[n]);
        for (std::size_t k = 0; k < snapshots.states[n].size(); ++k) {
            s += t + ',' + std::to_string(k) + ',' + csv_number(snapshots.states[n][k]) + '\n';
        }
    }
    return s;
}

}  // namespace sqra
