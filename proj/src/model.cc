/*
 * Copyright 2026 The locust-sdm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <fstream>
#include <sstream>
#include <type_traits>

#include "locust_sdm/errors.h"
#include "locust_sdm/io.h"
#include "locust_sdm/models.h"

namespace locust_sdm::models {

namespace {

constexpr std::string_view kMagic = "locust-sdm-model 1";

template <class>
inline constexpr bool kAlwaysFalse = false;

double Sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

// Whitespace-token writer and reader for the model format.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void Line(std::string_view key) { out_ << key; }
  Writer& Num(double v) {
    out_ << ' ' << FormatDoubleExact(v);
    return *this;
  }
  Writer& Int(long long v) {
    out_ << ' ' << v;
    return *this;
  }
  Writer& Str(std::string_view s) {
    out_ << ' ' << s;
    return *this;
  }
  void End() { out_ << '\n'; }
  void Vector(std::string_view key, const std::vector<double>& v) {
    Line(key);
    Int(static_cast<long long>(v.size()));
    for (double x : v) Num(x);
    End();
  }
  void Scalar(std::string_view key, double v) {
    Line(key);
    Num(v);
    End();
  }
  void Integer(std::string_view key, long long v) {
    Line(key);
    Int(v);
    End();
  }
  void Trees(const std::vector<Tree>& trees) {
    Integer("trees", static_cast<long long>(trees.size()));
    for (const Tree& t : trees) {
      Integer("tree", static_cast<long long>(t.nodes.size()));
      for (const TreeNode& n : t.nodes) {
        Line("node");
        Int(n.feature).Num(n.threshold).Int(n.left).Int(n.right).Num(n.value);
        End();
      }
    }
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string Token() {
    std::string t;
    if (!(in_ >> t)) Fail("unexpected end of model file");
    return t;
  }
  void Expect(std::string_view key) {
    const std::string t = Token();
    if (t != key) Fail("expected '" + std::string(key) + "', got '" + t + "'");
  }
  double Num() {
    const std::string t = Token();
    const auto v = ParseDouble(t);
    if (!v) Fail("bad number '" + t + "'");
    return *v;
  }
  long long Int() {
    const std::string t = Token();
    const auto v = ParseInt(t);
    if (!v) Fail("bad integer '" + t + "'");
    return *v;
  }
  std::size_t Count() {
    const long long v = Int();
    if (v < 0) Fail("negative count");
    return static_cast<std::size_t>(v);
  }
  double Scalar(std::string_view key) {
    Expect(key);
    return Num();
  }
  long long Integer(std::string_view key) {
    Expect(key);
    return Int();
  }
  std::vector<double> Vector(std::string_view key) {
    Expect(key);
    const std::size_t n = Count();
    std::vector<double> v(n);
    for (double& x : v) x = Num();
    return v;
  }
  std::vector<Tree> Trees() {
    Expect("trees");
    const std::size_t n = Count();
    std::vector<Tree> trees(n);
    for (Tree& t : trees) {
      Expect("tree");
      t.nodes.resize(Count());
      for (TreeNode& node : t.nodes) {
        Expect("node");
        node.feature = static_cast<int>(Int());
        node.threshold = Num();
        node.left = static_cast<int>(Int());
        node.right = static_cast<int>(Int());
        node.value = Num();
      }
      const int size = static_cast<int>(t.nodes.size());
      for (const TreeNode& node : t.nodes) {
        if (node.feature >= 0 &&
            (node.left < 0 || node.left >= size || node.right < 0 ||
             node.right >= size)) {
          Fail("tree child index out of range");
        }
      }
      if (t.nodes.empty()) Fail("empty tree");
    }
    return trees;
  }
  [[noreturn]] static void Fail(const std::string& msg) {
    throw Error(ErrorCode::kParse, "model file: " + msg);
  }

 private:
  std::istream& in_;
};

}  // namespace

std::string_view ModelKind(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> std::string_view {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          return "lr";
        } else if constexpr (std::is_same_v<T, Forest>) {
          return "rf";
        } else if constexpr (std::is_same_v<T, BoostedEnsemble>) {
          return "xgboost";
        } else if constexpr (std::is_same_v<T, OcsvmModel>) {
          return "ocsvm";
        } else if constexpr (std::is_same_v<T, MaxentModel>) {
          return "maxent";
        } else {
          static_assert(kAlwaysFalse<T>);
        }
      },
      model);
}

std::size_t NumFeatures(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Forest> ||
                      std::is_same_v<T, BoostedEnsemble>) {
          return m.num_features;
        } else {
          return m.num_features();
        }
      },
      model);
}

double Probability(const AnyModel& model, std::span<const double> x) {
  return std::visit(
      [x](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, OcsvmModel>) {
          return Sigmoid(m.Decision(x));
        } else {
          return m.Probability(x);
        }
      },
      model);
}

std::vector<double> PredictProba(const AnyModel& model, const Matrix& x) {
  if (x.cols() != NumFeatures(model)) {
    throw Error(ErrorCode::kSchemaMismatch,
                "matrix has " + std::to_string(x.cols()) +
                    " columns, model expects " +
                    std::to_string(NumFeatures(model)));
  }
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = Probability(model, x.row(i));
  return out;
}

std::vector<double> PredictProba(const TrainedModel& model, const Matrix& x) {
  if (!model.schema.empty() && model.schema.size() != x.cols()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "matrix width differs from the model schema");
  }
  return PredictProba(model.model, x);
}

std::vector<int> Classify(const AnyModel& model, const Matrix& x,
                          double threshold) {
  const std::vector<double> p = PredictProba(model, x);
  std::vector<int> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= threshold ? 1 : 0;
  return out;
}

void SaveModel(std::ostream& out, const TrainedModel& model) {
  Writer w(out);
  out << kMagic << '\n';
  w.Line("kind");
  w.Str(ModelKind(model.model));
  w.End();
  w.Integer("schema", static_cast<long long>(model.schema.size()));
  for (const std::string& name : model.schema) out << name << '\n';
  std::visit(
      [&w](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          w.Vector("weights", m.weights);
          w.Scalar("bias", m.bias);
          w.Vector("means", m.feature_means);
          w.Vector("stds", m.feature_stds);
        } else if constexpr (std::is_same_v<T, Forest>) {
          w.Integer("features", static_cast<long long>(m.num_features));
          w.Integer("mtry", m.mtry);
          w.Integer("max_depth", m.max_depth);
          w.Line("seeds");
          w.Int(static_cast<long long>(m.tree_seeds.size()));
          for (std::uint64_t s : m.tree_seeds) w.Str(std::to_string(s));
          w.End();
          w.Trees(m.trees);
        } else if constexpr (std::is_same_v<T, BoostedEnsemble>) {
          w.Integer("features", static_cast<long long>(m.num_features));
          w.Scalar("learning_rate", m.learning_rate);
          w.Scalar("base_score", m.base_score);
          w.Trees(m.trees);
        } else if constexpr (std::is_same_v<T, OcsvmModel>) {
          w.Scalar("gamma", m.gamma);
          w.Scalar("nu", m.nu);
          w.Scalar("rho", m.rho);
          w.Vector("alphas", m.alphas);
          w.Integer("support_vectors",
                    static_cast<long long>(m.support_vectors.rows()));
          w.Integer("dims", static_cast<long long>(m.support_vectors.cols()));
          for (std::size_t i = 0; i < m.support_vectors.rows(); ++i) {
            w.Line("sv");
            for (double v : m.support_vectors.row(i)) w.Num(v);
            w.End();
          }
        } else {
          w.Vector("betas", m.betas);
          w.Scalar("reg_factor", m.reg_factor);
          w.Vector("means", m.background_mean);
          w.Vector("stds", m.background_std);
          w.Scalar("log_partition", m.log_partition);
          w.Integer("n_background", static_cast<long long>(m.n_background));
          w.Integer("converged", m.converged ? 1 : 0);
        }
      },
      model.model);
  out << "end\n";
}

TrainedModel LoadModel(std::istream& in) {
  std::string magic;
  while (std::getline(in, magic)) {
    if (!magic.empty() && magic.front() != '#') break;
  }
  if (magic != kMagic) Reader::Fail("missing header line");
  Reader r(in);
  r.Expect("kind");
  const std::string kind = r.Token();
  TrainedModel out;
  r.Expect("schema");
  out.schema.resize(r.Count());
  for (std::string& name : out.schema) name = r.Token();
  auto check_len = [&out](std::size_t n) {
    if (!out.schema.empty() && n != out.schema.size()) {
      Reader::Fail("parameter length differs from schema");
    }
  };
  if (kind == "lr") {
    LinearModel m;
    m.weights = r.Vector("weights");
    m.bias = r.Scalar("bias");
    m.feature_means = r.Vector("means");
    m.feature_stds = r.Vector("stds");
    check_len(m.weights.size());
    if (m.feature_means.size() != m.weights.size() ||
        m.feature_stds.size() != m.weights.size()) {
      Reader::Fail("inconsistent vector lengths");
    }
    out.model = std::move(m);
  } else if (kind == "rf") {
    Forest m;
    m.num_features = static_cast<std::size_t>(r.Integer("features"));
    m.mtry = static_cast<int>(r.Integer("mtry"));
    m.max_depth = static_cast<int>(r.Integer("max_depth"));
    r.Expect("seeds");
    m.tree_seeds.resize(r.Count());
    for (std::uint64_t& s : m.tree_seeds) {
      const std::string t = r.Token();
      std::uint64_t v = 0;
      std::istringstream ss(t);
      if (!(ss >> v)) Reader::Fail("bad seed '" + t + "'");
      s = v;
    }
    m.trees = r.Trees();
    check_len(m.num_features);
    out.model = std::move(m);
  } else if (kind == "xgboost") {
    BoostedEnsemble m;
    m.num_features = static_cast<std::size_t>(r.Integer("features"));
    m.learning_rate = r.Scalar("learning_rate");
    m.base_score = r.Scalar("base_score");
    m.trees = r.Trees();
    check_len(m.num_features);
    out.model = std::move(m);
  } else if (kind == "ocsvm") {
    OcsvmModel m;
    m.gamma = r.Scalar("gamma");
    m.nu = r.Scalar("nu");
    m.rho = r.Scalar("rho");
    m.alphas = r.Vector("alphas");
    const auto rows = static_cast<std::size_t>(r.Integer("support_vectors"));
    const auto dims = static_cast<std::size_t>(r.Integer("dims"));
    if (rows != m.alphas.size()) Reader::Fail("alpha count differs");
    m.support_vectors = Matrix(rows, dims);
    for (std::size_t i = 0; i < rows; ++i) {
      r.Expect("sv");
      for (std::size_t j = 0; j < dims; ++j) m.support_vectors(i, j) = r.Num();
    }
    check_len(dims);
    out.model = std::move(m);
  } else if (kind == "maxent") {
    MaxentModel m;
    m.betas = r.Vector("betas");
    m.reg_factor = r.Scalar("reg_factor");
    m.background_mean = r.Vector("means");
    m.background_std = r.Vector("stds");
    m.log_partition = r.Scalar("log_partition");
    m.n_background = static_cast<std::size_t>(r.Integer("n_background"));
    m.converged = r.Integer("converged") != 0;
    check_len(m.betas.size());
    if (m.background_mean.size() != m.betas.size() ||
        m.background_std.size() != m.betas.size()) {
      Reader::Fail("inconsistent vector lengths");
    }
    out.model = std::move(m);
  } else {
    Reader::Fail("unknown model kind '" + kind + "'");
  }
  r.Expect("end");
  return out;
}

void SaveModelFile(const std::filesystem::path& path, const TrainedModel& model,
                   const std::string& provenance) {
  WriteFileAtomic(path, [&](std::ostream& out) {
    if (!provenance.empty()) out << "# " << provenance << '\n';
    SaveModel(out, model);
  });
}

TrainedModel LoadModelFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  return LoadModel(in);
}

}  // namespace locust_sdm::models
