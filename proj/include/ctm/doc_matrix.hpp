#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace ctm {

/// Dense matrix whose rows are labelled by document id, in corpus order.
struct DocMatrix {
    std::vector<std::string> ids;
    Eigen::MatrixXd values;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

/// CSV with header "id,<prefix>0,<prefix>1,..." and exact (round-trip) numbers.
std::string to_csv(const DocMatrix& matrix, const std::string& column_prefix);
DocMatrix parse_doc_matrix_csv(std::string_view text);

/// Plain numeric matrix CSV with the given header row.
std::string matrix_to_csv(const Eigen::MatrixXd& matrix, const std::vector<std::string>& header);

} // namespace ctm
