#include "attnlab/io.hpp"

#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

#include "attnlab/errors.hpp"

namespace attnlab {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    return f;
}

void set_round_trip(std::ostream& out) {
    out.precision(std::numeric_limits<double>::max_digits10);
}

}  // namespace

void write_matrix_csv(const Matrix& m, std::ostream& out) {
    set_round_trip(out);
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) {
            if (j) out << ',';
            out << m(i, j);
        }
        out << '\n';
    }
}

void write_matrix_csv(const Matrix& m, const std::string& path) {
    auto f = open_out(path);
    write_matrix_csv(m, f);
}

Matrix read_matrix_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ParseError("bad number on line " + std::to_string(line_no) + ": " + cell);
            }
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                ++used;
            if (used != cell.size())
                throw ParseError("bad number on line " + std::to_string(line_no) + ": " + cell);
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("ragged row on line " + std::to_string(line_no));
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().empty()) throw ParseError("empty matrix");
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path);
    return read_matrix_csv(f);
}

void write_cost_csv(const std::vector<CostEstimate>& rows, std::ostream& out) {
    out << "variant,phase,ops\n";
    for (const CostEstimate& c : rows)
        out << variant_tag(c.variant) << ',' << phase_tag(c.phase) << ',' << c.ops << '\n';
}

void write_cost_csv(const std::vector<CostEstimate>& rows, const std::string& path) {
    auto f = open_out(path);
    write_cost_csv(rows, f);
}

void write_loss_csv(const std::vector<double>& losses, std::ostream& out) {
    set_round_trip(out);
    out << "step,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) out << (i + 1) << ',' << losses[i] << '\n';
}

void write_loss_csv(const std::vector<double>& losses, const std::string& path) {
    auto f = open_out(path);
    write_loss_csv(losses, f);
}

void write_embedding_csv(const Matrix& scores, std::ostream& out) {
    set_round_trip(out);
    out << "head";
    if (scores.cols == 2) {
        out << ",x,y";
    } else {
        for (int c = 0; c < scores.cols; ++c) out << ",p" << (c + 1);
    }
    out << '\n';
    for (int i = 0; i < scores.rows; ++i) {
        out << i;
        for (int c = 0; c < scores.cols; ++c) out << ',' << scores(i, c);
        out << '\n';
    }
}

void write_embedding_csv(const Matrix& scores, const std::string& path) {
    auto f = open_out(path);
    write_embedding_csv(scores, f);
}

void write_manifest(const std::vector<std::pair<std::string, std::string>>& entries,
                    std::ostream& out) {
    for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
}

void write_manifest(const std::vector<std::pair<std::string, std::string>>& entries,
                    const std::string& path) {
    auto f = open_out(path);
    write_manifest(entries, f);
}

}  // namespace attnlab
