#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "attnlab/cost.hpp"
#include "attnlab/matrix.hpp"

namespace attnlab {

// Plain numeric grid, one row per line, round-trip precision, no header.
void write_matrix_csv(const Matrix& m, std::ostream& out);
void write_matrix_csv(const Matrix& m, const std::string& path);
Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv(const std::string& path);

// Header `variant,phase,ops`.
void write_cost_csv(const std::vector<CostEstimate>& rows, std::ostream& out);
void write_cost_csv(const std::vector<CostEstimate>& rows, const std::string& path);

// Header `step,loss`, steps numbered from 1.
void write_loss_csv(const std::vector<double>& losses, std::ostream& out);
void write_loss_csv(const std::vector<double>& losses, const std::string& path);

// Header `head,x,y` for two components, `head,p1,p2,...` otherwise; one row
// per sample row of `scores`.
void write_embedding_csv(const Matrix& scores, std::ostream& out);
void write_embedding_csv(const Matrix& scores, const std::string& path);

// `key=value` lines in the given order.
void write_manifest(const std::vector<std::pair<std::string, std::string>>& entries,
                    std::ostream& out);
void write_manifest(const std::vector<std::pair<std::string, std::string>>& entries,
                    const std::string& path);

}  // namespace attnlab
