#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace trotter {

enum class OperatorTag { unitary, hermitian, general };

std::string to_string(OperatorTag tag);
OperatorTag operator_tag_from_string(const std::string& name);

// L x L complex matrix with a tag saying what it is supposed to be.
struct DenseOperator {
    Eigen::MatrixXcd m;
    OperatorTag tag = OperatorTag::general;

    DenseOperator() = default;
    DenseOperator(Eigen::MatrixXcd matrix, OperatorTag t) : m(std::move(matrix)), tag(t) {}

    int dim() const { return static_cast<int>(m.rows()); }

    // max |U^dag U - I| or max |A - A^dag| depending on the tag
    double tag_violation() const;
    // Throws std::invalid_argument when the tag invariant fails
    // (1e-10 for unitary, 1e-12 for hermitian).
    void check() const;
};

enum class MatrixFormat { text, binary };

// Text layout:
//   # dense_operator
//   dim <L>
//   tag <unitary|hermitian|general>
//   then L rows, each with L pairs "re im", row-major.
// Binary layout: 8-byte magic "DENSEOP1", int64 dim, int32 tag, then
// 2*L*L little-endian doubles (re, im) in row-major order.
void write_operator(const DenseOperator& op, std::ostream& out, MatrixFormat format);
DenseOperator read_operator(std::istream& in, MatrixFormat format);
void save_operator(const DenseOperator& op, const std::string& path, MatrixFormat format);
DenseOperator load_operator(const std::string& path, MatrixFormat format);

}  // namespace trotter
