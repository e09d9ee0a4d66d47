#include "ctm/doc_matrix.hpp"

#include "ctm/error.hpp"
#include "ctm/util.hpp"

namespace ctm {

std::string to_csv(const DocMatrix& matrix, const std::string& column_prefix) {
    std::string out = "id";
    for (Eigen::Index c = 0; c < matrix.values.cols(); ++c) {
        out += ',' + column_prefix + std::to_string(c);
    }
    out += '\n';
    for (Eigen::Index r = 0; r < matrix.values.rows(); ++r) {
        out += csv_escape(matrix.ids[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < matrix.values.cols(); ++c) {
            out += ',' + format_double(matrix.values(r, c));
        }
        out += '\n';
    }
    return out;
}

DocMatrix parse_doc_matrix_csv(std::string_view text) {
    const auto records = parse_csv(text);
    if (records.empty()) throw ParseError("empty matrix file", 1);
    const std::size_t width = records.front().fields.size();
    if (width < 1 || records.front().fields[0] != "id") throw ParseError("expected an 'id' column", 1);

    DocMatrix m;
    m.values.resize(static_cast<Eigen::Index>(records.size() - 1), static_cast<Eigen::Index>(width - 1));
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() != width) throw ParseError("ragged row", rec.line);
        m.ids.push_back(rec.fields[0]);
        for (std::size_t c = 1; c < width; ++c) {
            try {
                m.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) =
                    parse_double(rec.fields[c]);
            } catch (const ParseError& e) {
                throw ParseError(e.what(), rec.line);
            }
        }
    }
    return m;
}

std::string matrix_to_csv(const Eigen::MatrixXd& matrix, const std::vector<std::string>& header) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(header[i]);
    }
    out += '\n';
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
            if (c) out += ',';
            out += format_double(matrix(r, c));
        }
        out += '\n';
    }
    return out;
}

} // namespace ctm
