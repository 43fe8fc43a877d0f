#include "ddcrane/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace ddcrane {

Trajectory::Trajectory(int q_, int m_, double rate_, Eigen::VectorXd data_,
                       std::vector<std::string> names)
    : q(q_), m(m_), rate(rate_), data(std::move(data_)), channel_names(std::move(names)) {
    validate();
}

void Trajectory::validate() const {
    if (q < 2 || m < 1 || m >= q) throw ChannelMismatch("trajectory needs 1 <= m < q");
    if (!(rate > 0)) throw ChannelMismatch("trajectory rate must be positive");
    if (data.size() % q != 0) throw DimensionMismatch("trajectory length not divisible by q");
    if (static_cast<int>(channel_names.size()) != q)
        throw ChannelMismatch("trajectory needs one name per channel");
}

Eigen::VectorXd Trajectory::channel(int ch) const {
    if (ch < 0 || ch >= q) throw OutOfBounds("channel index out of range");
    return samples_view().row(ch).transpose();
}

int Trajectory::channel_index(const std::string& name) const {
    for (int c = 0; c < q; ++c)
        if (channel_names[static_cast<std::size_t>(c)] == name) return c;
    throw ChannelMismatch("no channel named " + name);
}

bool Trajectory::has_channel(const std::string& name) const {
    return std::find(channel_names.begin(), channel_names.end(), name) != channel_names.end();
}

Trajectory Trajectory::window(Index first_sample, Index count) const {
    if (first_sample < 0 || count < 0 || first_sample + count > samples())
        throw OutOfBounds("window exceeds trajectory");
    return {q, m, rate, data.segment(q * first_sample, q * count), channel_names};
}

Trajectory with_data(const Trajectory& like, Eigen::VectorXd data) {
    return {like.q, like.m, like.rate, std::move(data), like.channel_names};
}

IndexSet::IndexSet(std::vector<Index> idx) : idx_(std::move(idx)) {
    for (std::size_t k = 0; k < idx_.size(); ++k) {
        if (idx_[k] < 0) throw OutOfBounds("negative index");
        if (k > 0 && idx_[k] <= idx_[k - 1]) throw OutOfBounds("index set must be strictly increasing");
    }
}

IndexSet IndexSet::samples(int q, Index first, Index count) {
    std::vector<Index> v;
    v.reserve(static_cast<std::size_t>(q * count));
    for (Index i = q * first; i < q * (first + count); ++i) v.push_back(i);
    return IndexSet(std::move(v));
}

IndexSet IndexSet::channels(int q, const std::vector<int>& ch, Index first, Index count) {
    std::vector<int> c = ch;
    std::sort(c.begin(), c.end());
    std::vector<Index> v;
    for (Index i = first; i < first + count; ++i)
        for (int k : c) v.push_back(q * i + k);
    return IndexSet(std::move(v));
}

IndexSet IndexSet::all(Index n) {
    std::vector<Index> v(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return IndexSet(std::move(v));
}

IndexSet IndexSet::unite(const IndexSet& a, const IndexSet& b) {
    std::vector<Index> v;
    std::set_union(a.idx_.begin(), a.idx_.end(), b.idx_.begin(), b.idx_.end(), std::back_inserter(v));
    return IndexSet(std::move(v));
}

IndexSet IndexSet::complement(Index n) const {
    std::vector<Index> v;
    std::size_t k = 0;
    for (Index i = 0; i < n; ++i) {
        if (k < idx_.size() && idx_[k] == i) {
            ++k;
            continue;
        }
        v.push_back(i);
    }
    return IndexSet(std::move(v));
}

bool IndexSet::contains(Index i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

void check_bounds(const IndexSet& idx, Index n) {
    if (!idx.empty() && idx.max() >= n) throw OutOfBounds("index set exceeds length");
}

void scatter(const Eigen::VectorXd& v, const IndexSet& idx, Eigen::VectorXd& out) {
    if (v.size() != idx.size()) throw DimensionMismatch("scatter: size mismatch");
    check_bounds(idx, out.size());
    for (Index k = 0; k < idx.size(); ++k) out(idx[k]) = v(k);
}

int BehaviorModel::channel_index(const std::string& name) const {
    for (int c = 0; c < q; ++c)
        if (channel_names[static_cast<std::size_t>(c)] == name) return c;
    throw ChannelMismatch("model has no channel named " + name);
}

void BehaviorModel::validate() const {
    if (M.rows() != q * L) throw DimensionMismatch("model rows must equal q*L");
    if (M.cols() < 1) throw DimensionMismatch("model needs at least one column");
    if (!M.allFinite()) throw NonFiniteState("model contains non-finite entries");
}

BehaviorModel build_hankel(const std::vector<Trajectory>& trajectories, Index L) {
    if (trajectories.empty()) throw TooShort("no trajectories given");
    if (L < 1) throw TooShort("depth must be positive");
    const Trajectory& first = trajectories.front();
    Index cols = 0;
    for (const auto& t : trajectories) {
        if (t.q != first.q || t.m != first.m || t.rate != first.rate ||
            t.channel_names != first.channel_names)
            throw ChannelMismatch("trajectories do not share a channel layout");
        if (t.samples() < L) throw TooShort("trajectory shorter than depth");
        cols += t.samples() - L + 1;
    }
    BehaviorModel model;
    model.L = L;
    model.q = first.q;
    model.m = first.m;
    model.rate = first.rate;
    model.channel_names = first.channel_names;
    model.M.resize(first.q * L, cols);
    Index c = 0;
    for (const auto& t : trajectories) {
        const Index n = t.samples() - L + 1;
        for (Index k = 0; k < n; ++k) model.M.col(c++) = t.data.segment(t.q * k, t.q * L);
    }
    return model;
}

BehaviorModel build_hankel(const Trajectory& trajectory, Index L) {
    return build_hankel(std::vector<Trajectory>{trajectory}, L);
}

namespace {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return {};
    if (M.rows() <= M.cols()) return Eigen::BDCSVD<Eigen::MatrixXd>(M).singularValues();
    return Eigen::BDCSVD<Eigen::MatrixXd>(M.transpose()).singularValues();
}

Index count_above(const Eigen::VectorXd& s, double rel_tol) {
    if (s.size() == 0 || s(0) == 0.0) return 0;
    return (s.array() > rel_tol * s(0)).count();
}

}  // namespace

Index numerical_rank(const Eigen::MatrixXd& M, double rel_tol) {
    return count_above(singular_values(M), rel_tol);
}

RankReport identifiability_rank(const BehaviorModel& model, Index n_hypothesis, double rel_tol) {
    const Eigen::VectorXd s = singular_values(model.M);
    RankReport r;
    r.rank = count_above(s, rel_tol);
    r.expected = model.m * model.L + n_hypothesis;
    r.satisfied = (r.rank == r.expected);
    r.sigma_max = s.size() ? s(0) : 0.0;
    return r;
}

std::vector<Index> qr_pivot_order(const Eigen::MatrixXd& M) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
    const auto& perm = qr.colsPermutation().indices();
    std::vector<Index> order(static_cast<std::size_t>(perm.size()));
    for (Index k = 0; k < perm.size(); ++k) order[static_cast<std::size_t>(k)] = perm(k);
    return order;
}

BehaviorModel select_columns(const BehaviorModel& model, const std::vector<Index>& cols) {
    if (cols.empty()) throw DimensionMismatch("column selection is empty");
    BehaviorModel out = model;
    out.M = model.M(Eigen::all, cols);
    out.is_hankel = false;
    out.nu = static_cast<Index>(cols.size());
    return out;
}

BehaviorModel select_columns_qr(const BehaviorModel& model, Index nu) {
    if (nu < 1) throw DimensionMismatch("nu must be at least 1");
    std::vector<Index> order = qr_pivot_order(model.M);
    order.resize(static_cast<std::size_t>(std::min<Index>(nu, model.cols())));
    BehaviorModel out = select_columns(model, order);
    out.nu = nu;
    return out;
}

ThinSvd thin_svd(const Eigen::MatrixXd& M) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Index kept_rank(const Eigen::VectorXd& s, double delta, bool relative) {
    if (s.size() == 0) return 0;
    const double thr = relative ? delta * s(0) : delta;
    return (s.array() >= thr).count();
}

Eigen::MatrixXd reconstruct(const ThinSvd& svd, double delta, bool relative) {
    const Index r = kept_rank(svd.s, delta, relative);
    return svd.U.leftCols(r) * svd.s.head(r).asDiagonal() * svd.V.leftCols(r).transpose();
}

BehaviorModel denoise_svd(const BehaviorModel& model, const ThinSvd& svd, double delta,
                          bool relative) {
    if (relative && !(delta >= 0.0 && delta < 1.0))
        throw DimensionMismatch("relative delta must lie in [0, 1)");
    if (!relative && delta < 0.0) throw DimensionMismatch("delta must be nonnegative");
    BehaviorModel out = model;
    if (delta > 0.0) out.M = reconstruct(svd, delta, relative);
    out.is_hankel = false;
    out.delta = delta;
    out.delta_relative = relative;
    return out;
}

BehaviorModel denoise_svd(const BehaviorModel& model, double delta, bool relative) {
    if (delta == 0.0) {
        BehaviorModel out = model;
        out.is_hankel = false;
        out.delta = 0.0;
        out.delta_relative = relative;
        return out;
    }
    return denoise_svd(model, thin_svd(model.M), delta, relative);
}

}  // namespace ddcrane
