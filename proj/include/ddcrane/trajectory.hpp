#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddcrane/errors.hpp"

namespace ddcrane {

using Index = Eigen::Index;

/// Sample-major flattened multichannel sequence. Sample i occupies
/// data[q*i .. q*i+q-1]; the first m channels are inputs.
struct Trajectory {
    int q = 0;
    int m = 0;
    double rate = 20.0;
    Eigen::VectorXd data;
    std::vector<std::string> channel_names;

    Trajectory() = default;
    Trajectory(int q_, int m_, double rate_, Eigen::VectorXd data_,
               std::vector<std::string> names);

    Index samples() const { return q == 0 ? 0 : data.size() / q; }
    double duration() const { return static_cast<double>(samples()) / rate; }

    double operator()(Index sample, int ch) const { return data(q * sample + ch); }
    double& operator()(Index sample, int ch) { return data(q * sample + ch); }

    /// q x N view, column i is sample i.
    Eigen::Map<const Eigen::MatrixXd> samples_view() const {
        return {data.data(), q, samples()};
    }
    Eigen::Map<Eigen::MatrixXd> samples_view() { return {data.data(), q, samples()}; }

    Eigen::VectorXd channel(int ch) const;
    Eigen::VectorXd channel(const std::string& name) const { return channel(channel_index(name)); }
    int channel_index(const std::string& name) const;
    bool has_channel(const std::string& name) const;

    Trajectory window(Index first_sample, Index count) const;
    void validate() const;
};

/// Same layout, different data.
Trajectory with_data(const Trajectory& like, Eigen::VectorXd data);

/// Sorted, duplicate-free, 0-based positions in a flattened trajectory.
class IndexSet {
public:
    IndexSet() = default;
    explicit IndexSet(std::vector<Index> idx);

    /// Every element of samples [first, first+count) for a q-channel layout.
    static IndexSet samples(int q, Index first, Index count);
    /// Channels ch of samples [first, first+count).
    static IndexSet channels(int q, const std::vector<int>& ch, Index first, Index count);
    static IndexSet all(Index n);
    static IndexSet unite(const IndexSet& a, const IndexSet& b);
    IndexSet complement(Index n) const;

    const std::vector<Index>& indices() const { return idx_; }
    Index size() const { return static_cast<Index>(idx_.size()); }
    bool empty() const { return idx_.empty(); }
    Index operator[](Index k) const { return idx_[static_cast<std::size_t>(k)]; }
    Index max() const { return idx_.empty() ? -1 : idx_.back(); }
    bool contains(Index i) const;

private:
    std::vector<Index> idx_;
};

void check_bounds(const IndexSet& idx, Index n);

/// Rows (or vector elements) at idx in order.
template <typename Derived>
typename Derived::PlainObject truncate(const Eigen::MatrixBase<Derived>& M, const IndexSet& idx) {
    check_bounds(idx, M.rows());
    return M(idx.indices(), Eigen::all);
}

/// Writes v into the positions idx of out (inverse of truncate on a vector).
void scatter(const Eigen::VectorXd& v, const IndexSet& idx, Eigen::VectorXd& out);

/// Trajectory matrix of depth L with metadata.
struct BehaviorModel {
    Eigen::MatrixXd M;
    Index L = 0;
    int q = 0;
    int m = 0;
    double rate = 20.0;
    bool is_hankel = true;
    Index nu = -1;       // columns kept by selection, -1 when no selection was applied
    double delta = 0.0;  // singular value threshold applied, 0 when none
    bool delta_relative = true;
    std::vector<std::string> channel_names;

    Index rows() const { return M.rows(); }
    Index cols() const { return M.cols(); }
    int channel_index(const std::string& name) const;
    void validate() const;
};

BehaviorModel build_hankel(const std::vector<Trajectory>& trajectories, Index L);
BehaviorModel build_hankel(const Trajectory& trajectory, Index L);

struct RankReport {
    Index rank = 0;
    Index expected = 0;
    bool satisfied = false;
    double sigma_max = 0.0;
};

Index numerical_rank(const Eigen::MatrixXd& M, double rel_tol = 1e-10);
RankReport identifiability_rank(const BehaviorModel& model, Index n_hypothesis,
                                double rel_tol = 1e-10);

/// Pivot order of a column-pivoted QR of M (all columns).
std::vector<Index> qr_pivot_order(const Eigen::MatrixXd& M);
BehaviorModel select_columns(const BehaviorModel& model, const std::vector<Index>& cols);
BehaviorModel select_columns_qr(const BehaviorModel& model, Index nu);

struct ThinSvd {
    Eigen::MatrixXd U;
    Eigen::VectorXd s;
    Eigen::MatrixXd V;
};

ThinSvd thin_svd(const Eigen::MatrixXd& M);
/// Number of singular values kept at threshold delta.
Index kept_rank(const Eigen::VectorXd& s, double delta, bool relative = true);
Eigen::MatrixXd reconstruct(const ThinSvd& svd, double delta, bool relative = true);

BehaviorModel denoise_svd(const BehaviorModel& model, double delta, bool relative = true);
BehaviorModel denoise_svd(const BehaviorModel& model, const ThinSvd& svd, double delta,
                          bool relative = true);

}  // namespace ddcrane
