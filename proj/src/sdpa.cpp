#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <vector>

#include "mub/conic_solver.hpp"
#include "mub/errors.hpp"

namespace mub {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// (matno, block, i, j) -> value; std::map keeps the output sorted.
using EntryMap = std::map<std::tuple<Eigen::Index, int, Eigen::Index, Eigen::Index>, double>;

}  // namespace

std::string to_sdpa(const ConicProgram& p) {
  p.validate();
  const Eigen::Index lp = 2 * p.zero_rows + p.nonneg_rows;
  const int lp_block = lp > 0 ? 1 : 0;
  const int psd_block = p.psd_dim > 0 ? lp_block + 1 : 0;

  // X = sum_i F_i x_i - F_0 with F_i = -A(:, i) and F_0 = -b.
  EntryMap entries;
  auto put = [&](Eigen::Index mat, int blk, Eigen::Index i, Eigen::Index j, double v) {
    if (v != 0.0) entries[{mat, blk, i, j}] = v;
  };
  auto lp_row = [&](Eigen::Index row, Eigen::Index pos, double sign) {
    put(0, lp_block, pos, pos, -sign * p.b[row]);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator e(p.A, row); e; ++e) {
      put(e.col() + 1, lp_block, pos, pos, -sign * e.value());
    }
  };
  Eigen::Index pos = 1;
  for (Eigen::Index r = 0; r < p.zero_rows; ++r) {
    lp_row(r, pos++, 1.0);
    lp_row(r, pos++, -1.0);
  }
  for (Eigen::Index r = p.zero_rows; r < p.zero_rows + p.nonneg_rows; ++r) lp_row(r, pos++, 1.0);
  Eigen::Index r = p.zero_rows + p.nonneg_rows;
  for (Eigen::Index i = 1; i <= p.psd_dim; ++i) {
    for (Eigen::Index j = i; j <= p.psd_dim; ++j, ++r) {
      put(0, psd_block, i, j, -p.b[r]);
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator e(p.A, r); e; ++e) {
        put(e.col() + 1, psd_block, i, j, -e.value());
      }
    }
  }

  std::ostringstream body;
  body << p.num_vars() << "\n" << (lp_block + (psd_block ? 1 : 0)) << "\n";
  if (lp_block) body << -lp << (psd_block ? " " : "");
  if (psd_block) body << p.psd_dim;
  body << "\n";
  for (Eigen::Index i = 0; i < p.num_vars(); ++i) body << (i ? " " : "") << g17(p.c[i]);
  body << "\n";
  for (const auto& [key, v] : entries) {
    const auto& [mat, blk, i, j] = key;
    body << mat << " " << blk << " " << i << " " << j << " " << g17(v) << "\n";
  }
  const std::string text = body.str();
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
  std::ostringstream out;
  out << "\"mub conic program hash=" << hash << " zero=" << p.zero_rows
      << " nonneg=" << p.nonneg_rows << " psd=" << p.psd_dim << "\n"
      << text;
  return out.str();
}

void export_sdpa(const ConicProgram& p, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << to_sdpa(p);
  if (!f) throw std::runtime_error("write failed: " + path);
}

ConicProgram parse_sdpa(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  long long zero = -1, nonneg = -1;
  // Comment lines, possibly carrying the cone partition.
  while (in.peek() == '"' || in.peek() == '*') {
    std::getline(in, line);
    const auto zp = line.find("zero="), np = line.find("nonneg=");
    if (zp != std::string::npos && np != std::string::npos) {
      zero = std::stoll(line.substr(zp + 5));
      nonneg = std::stoll(line.substr(np + 7));
    }
  }

  // SDPA allows punctuation between numbers in the header lines.
  auto next_line_numbers = [&](std::vector<double>& out) {
    out.clear();
    while (out.empty() && std::getline(in, line)) {
      for (char& ch : line) {
        if (ch == ',' || ch == '(' || ch == ')' || ch == '{' || ch == '}') ch = ' ';
      }
      std::istringstream ls(line);
      double v;
      while (ls >> v) out.push_back(v);
    }
    if (out.empty()) throw ValidationError("sdpa: truncated header");
  };
  std::vector<double> nums;
  next_line_numbers(nums);
  const auto m = static_cast<Eigen::Index>(nums[0]);
  next_line_numbers(nums);
  const auto nblocks = static_cast<int>(nums[0]);
  next_line_numbers(nums);
  if (static_cast<int>(nums.size()) < nblocks) throw ValidationError("sdpa: bad block structure");
  std::vector<long long> blocks(nums.begin(), nums.begin() + nblocks);
  Eigen::VectorXd c(m);
  Eigen::Index got = 0;
  while (got < m) {
    next_line_numbers(nums);
    for (double v : nums) {
      if (got < m) c[got++] = v;
    }
  }

  int lp_block = 0, psd_block = 0;
  long long lp_size = 0, psd_dim = 0;
  for (int k = 0; k < nblocks; ++k) {
    if (blocks[k] < 0 && !lp_block) {
      lp_block = k + 1;
      lp_size = -blocks[k];
    } else if (blocks[k] > 0 && !psd_block) {
      psd_block = k + 1;
      psd_dim = blocks[k];
    } else {
      throw ValidationError("sdpa: only one diagonal and one PSD block are supported");
    }
  }
  if (zero < 0) {
    zero = 0;
    nonneg = lp_size;
  }
  if (2 * zero + nonneg != lp_size) throw ValidationError("sdpa: cone partition mismatch");

  ConicProgram p;
  p.c = c;
  p.zero_rows = zero;
  p.nonneg_rows = nonneg;
  p.psd_dim = psd_dim;
  p.b = Eigen::VectorXd::Zero(p.num_rows());
  // Row of each diagonal position; the negated copies of zero rows are skipped.
  auto lp_to_row = [&](long long pos) -> Eigen::Index {
    if (pos <= 2 * zero) return (pos % 2 == 1) ? (pos - 1) / 2 : -1;
    return zero + (pos - 2 * zero - 1);
  };
  auto psd_to_row = [&](long long i, long long j) -> Eigen::Index {
    if (i > j) std::swap(i, j);
    // rows before row i of the upper triangle: sum_{a<i} (k - a)
    const long long a = i - 1;
    return zero + nonneg + a * psd_dim - a * (a - 1) / 2 + (j - i);
  };

  std::vector<Eigen::Triplet<double>> trip;
  long long mat, blk, i, j;
  double v;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    if (!(ls >> mat >> blk >> i >> j >> v)) continue;
    Eigen::Index row;
    if (blk == lp_block) {
      if (i != j) throw ValidationError("sdpa: off-diagonal entry in a diagonal block");
      row = lp_to_row(i);
      if (row < 0) continue;
    } else if (blk == psd_block) {
      row = psd_to_row(i, j);
    } else {
      throw ValidationError("sdpa: entry for an unknown block");
    }
    if (mat == 0) {
      p.b[row] = -v;
    } else {
      trip.emplace_back(row, static_cast<Eigen::Index>(mat - 1), -v);
    }
  }
  p.A.resize(p.num_rows(), m);
  p.A.setFromTriplets(trip.begin(), trip.end());
  p.A.makeCompressed();
  return p;
}

}  // namespace mub
