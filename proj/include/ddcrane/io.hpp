#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "ddcrane/trajectory.hpp"

namespace ddcrane {

/// Key/value lines written as "# key: value" above a CSV header.
using Metadata = std::map<std::string, std::string>;

/// 16 significant digits in scientific notation.
std::string format_double(double x);

/// Header row "t,<channel names>", one row per sample, time at 1/rate spacing.
void write_trajectory_csv(const std::string& path, const Trajectory& traj, const Metadata& meta = {});
Trajectory read_trajectory_csv(const std::string& path, Metadata* meta = nullptr);

/// Plain numeric table with a header row.
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows, const Metadata& meta = {});

/// "DDCM" magic, uint64 rows, uint64 cols, float64 column-major, little endian.
void write_matrix(const std::string& path, const Eigen::MatrixXd& M);
Eigen::MatrixXd read_matrix(const std::string& path);

/// model.bin + model.json in dir.
void save_model(const std::string& dir, const BehaviorModel& model, const Metadata& meta = {});
BehaviorModel load_model(const std::string& dir);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
void ensure_directory(const std::string& dir);

std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

}  // namespace ddcrane
