#include "trotter/dense_operator.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace trotter {

std::string to_string(OperatorTag tag) {
    switch (tag) {
    case OperatorTag::unitary: return "unitary";
    case OperatorTag::hermitian: return "hermitian";
    case OperatorTag::general: return "general";
    }
    return "general";
}

OperatorTag operator_tag_from_string(const std::string& name) {
    if (name == "unitary") return OperatorTag::unitary;
    if (name == "hermitian") return OperatorTag::hermitian;
    if (name == "general") return OperatorTag::general;
    throw std::invalid_argument("unknown operator tag '" + name + "'");
}

double DenseOperator::tag_violation() const {
    switch (tag) {
    case OperatorTag::unitary: {
        const Eigen::MatrixXcd d = m.adjoint() * m - Eigen::MatrixXcd::Identity(m.rows(), m.cols());
        return d.cwiseAbs().maxCoeff();
    }
    case OperatorTag::hermitian:
        return (m - m.adjoint()).cwiseAbs().maxCoeff();
    case OperatorTag::general:
        return 0.0;
    }
    return 0.0;
}

void DenseOperator::check() const {
    if (m.rows() != m.cols()) throw std::invalid_argument("DenseOperator: matrix is not square");
    const double v = tag_violation();
    if (tag == OperatorTag::unitary && v >= 1e-10)
        throw std::invalid_argument("DenseOperator: unitarity violated by " + std::to_string(v));
    if (tag == OperatorTag::hermitian && v >= 1e-12)
        throw std::invalid_argument("DenseOperator: hermiticity violated by " + std::to_string(v));
}

namespace {

constexpr char kMagic[8] = {'D', 'E', 'N', 'S', 'E', 'O', 'P', '1'};

int32_t tag_code(OperatorTag t) { return static_cast<int32_t>(t); }

}  // namespace

void write_operator(const DenseOperator& op, std::ostream& out, MatrixFormat format) {
    const int64_t L = op.dim();
    if (format == MatrixFormat::text) {
        out << "# dense_operator\n" << "dim " << L << "\n" << "tag " << to_string(op.tag) << "\n";
        out << std::setprecision(17);
        for (int64_t i = 0; i < L; ++i) {
            for (int64_t j = 0; j < L; ++j) {
                if (j) out << ' ';
                out << op.m(i, j).real() << ' ' << op.m(i, j).imag();
            }
            out << '\n';
        }
        return;
    }
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&L), sizeof L);
    const int32_t t = tag_code(op.tag);
    out.write(reinterpret_cast<const char*>(&t), sizeof t);
    for (int64_t i = 0; i < L; ++i)
        for (int64_t j = 0; j < L; ++j) {
            const double re = op.m(i, j).real(), im = op.m(i, j).imag();
            out.write(reinterpret_cast<const char*>(&re), sizeof re);
            out.write(reinterpret_cast<const char*>(&im), sizeof im);
        }
}

DenseOperator read_operator(std::istream& in, MatrixFormat format) {
    DenseOperator op;
    if (format == MatrixFormat::text) {
        std::string word;
        std::getline(in, word);
        if (word != "# dense_operator") throw std::invalid_argument("read_operator: missing text header");
        int64_t L = 0;
        std::string tag;
        if (!(in >> word >> L) || word != "dim" || L <= 0) throw std::invalid_argument("read_operator: bad dim line");
        if (!(in >> word >> tag) || word != "tag") throw std::invalid_argument("read_operator: bad tag line");
        op.tag = operator_tag_from_string(tag);
        op.m.resize(L, L);
        for (int64_t i = 0; i < L; ++i)
            for (int64_t j = 0; j < L; ++j) {
                double re, im;
                if (!(in >> re >> im)) throw std::invalid_argument("read_operator: truncated matrix");
                op.m(i, j) = {re, im};
            }
        return op;
    }
    char magic[8];
    int64_t L = 0;
    int32_t t = 0;
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::invalid_argument("read_operator: bad magic");
    in.read(reinterpret_cast<char*>(&L), sizeof L);
    in.read(reinterpret_cast<char*>(&t), sizeof t);
    if (!in || L <= 0 || t < 0 || t > 2) throw std::invalid_argument("read_operator: bad binary header");
    op.tag = static_cast<OperatorTag>(t);
    op.m.resize(L, L);
    for (int64_t i = 0; i < L; ++i)
        for (int64_t j = 0; j < L; ++j) {
            double re, im;
            in.read(reinterpret_cast<char*>(&re), sizeof re);
            in.read(reinterpret_cast<char*>(&im), sizeof im);
            if (!in) throw std::invalid_argument("read_operator: truncated matrix");
            op.m(i, j) = {re, im};
        }
    return op;
}

void save_operator(const DenseOperator& op, const std::string& path, MatrixFormat format) {
    std::ofstream out(path, format == MatrixFormat::binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_operator(op, out, format);
}

DenseOperator load_operator(const std::string& path, MatrixFormat format) {
    std::ifstream in(path, format == MatrixFormat::binary ? std::ios::binary : std::ios::in);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    return read_operator(in, format);
}

}  // namespace trotter
