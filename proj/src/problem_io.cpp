#include "aerovio/problem_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "aerovio/errors.hpp"
#include "aerovio/run_io.hpp"

namespace aerovio {

namespace {

class Tokens {
 public:
  explicit Tokens(std::istream& in) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream words(line);
      std::string w;
      while (words >> w) tokens_.push_back({w, line_no});
    }
  }

  bool done() const { return pos_ >= tokens_.size(); }

  std::string word(const char* what) {
    if (done()) throw FormatError(std::string("unexpected end of input, expected ") + what);
    return tokens_[pos_++].text;
  }

  double number(const char* what) {
    if (done()) throw FormatError(std::string("unexpected end of input, expected ") + what);
    const Token& t = tokens_[pos_++];
    try {
      return parse_number(t.text);
    } catch (const FormatError&) {
      throw FormatError("line " + std::to_string(t.line) + ": expected " + what + ", got '" + t.text + "'");
    }
  }

  Eigen::Index index(const char* what) {
    const double v = number(what);
    if (v < 0.0 || v != static_cast<double>(static_cast<Eigen::Index>(v))) {
      throw FormatError(std::string(what) + " must be a nonnegative integer");
    }
    return static_cast<Eigen::Index>(v);
  }

 private:
  struct Token {
    std::string text;
    int line;
  };
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

std::unique_ptr<SmoothObjective> SerializedProblem::make_objective() const {
  if (kind == ObjectiveKind::Quadratic) return std::make_unique<QuadraticObjective>(H, c);
  return std::make_unique<RangeObjective>(A.cols(), x_index, y_index, terms);
}

SerializedProblem parse_problem(std::istream& in) {
  Tokens tok(in);
  SerializedProblem p;
  const Eigen::Index n = tok.index("n");
  const Eigen::Index m = tok.index("m");
  if (n == 0 || m == 0) throw FormatError("n and m must be positive");

  p.A.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) p.A(i, j) = tok.number("entry of A");
  }
  p.b.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) p.b(i) = tok.number("entry of b");

  const std::string kind = tok.word("objective name");
  if (kind == "quadratic") {
    p.kind = ObjectiveKind::Quadratic;
    p.H.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) p.H(i, j) = tok.number("entry of H");
    }
    p.c.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) p.c(i) = tok.number("entry of c");
  } else if (kind == "quartic_vio") {
    p.kind = ObjectiveKind::QuarticVio;
    p.x_index = tok.index("ix");
    p.y_index = tok.index("iy");
    const Eigen::Index count = tok.index("T");
    if (p.x_index >= n || p.y_index >= n || p.x_index == p.y_index) {
      throw FormatError("quartic_vio: ix and iy must be distinct indices below n");
    }
    for (Eigen::Index t = 0; t < count; ++t) {
      RangeTerm term;
      term.center.x() = tok.number("cx");
      term.center.y() = tok.number("cy");
      term.target = tok.number("R");
      p.terms.push_back(term);
    }
  } else {
    throw FormatError("unknown objective '" + kind + "' (expected quadratic or quartic_vio)");
  }

  if (!tok.done()) {
    const std::string key = tok.word("hint");
    if (key != "hint") throw FormatError("unexpected token '" + key + "' after the objective");
    Eigen::VectorXd hint(n);
    for (Eigen::Index i = 0; i < n; ++i) hint(i) = tok.number("entry of hint");
    p.hint = hint;
    if (!tok.done()) throw FormatError("trailing tokens after the hint");
  }
  return p;
}

SerializedProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open problem file '" + path + "'");
  return parse_problem(in);
}

void write_problem(std::ostream& out, const SerializedProblem& p) {
  auto row = [&out](const auto& v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) out << (j ? " " : "") << format_number(v(j));
    out << '\n';
  };
  out << p.A.cols() << ' ' << p.A.rows() << '\n';
  for (Eigen::Index i = 0; i < p.A.rows(); ++i) row(p.A.row(i));
  row(p.b);
  if (p.kind == ObjectiveKind::Quadratic) {
    out << "quadratic\n";
    for (Eigen::Index i = 0; i < p.H.rows(); ++i) row(p.H.row(i));
    row(p.c);
  } else {
    out << "quartic_vio\n" << p.x_index << ' ' << p.y_index << ' ' << p.terms.size() << '\n';
    for (const auto& t : p.terms) {
      out << format_number(t.center.x()) << ' ' << format_number(t.center.y()) << ' ' << format_number(t.target)
          << '\n';
    }
  }
  if (p.hint) {
    out << "hint\n";
    row(*p.hint);
  }
}

}  // namespace aerovio
