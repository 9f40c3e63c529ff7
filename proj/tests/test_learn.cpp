#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "lstmf/error.hpp"
#include "lstmf/learn.hpp"
#include "lstmf/random.hpp"

using namespace lstmf;

namespace {

SampleMatrix rows(const std::vector<std::vector<double>>& r) {
  SampleMatrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.front().size()));
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i][j];
  return m;
}

// Three well separated clusters in 4-D.
void cluster_data(int per_class, Rng& rng, SampleMatrix& x, std::vector<std::vector<std::string>>& labels) {
  const double centers[3][4] = {{5, 0, 0, 1}, {0, 5, 0, 1}, {0, 0, 5, 1}};
  const char* names[3] = {"run", "jump", "walk"};
  x.resize(3 * per_class, 4);
  labels.clear();
  for (int i = 0; i < 3 * per_class; ++i) {
    const int c = i % 3;
    for (int j = 0; j < 4; ++j) x(i, j) = centers[c][j] + 0.3 * rng.normal();
    labels.push_back({names[c]});
  }
}

ManifestEntry entry(std::string id, std::string group) {
  ManifestEntry e;
  e.id = std::move(id);
  e.group = std::move(group);
  e.labels = {"a"};
  return e;
}

}  // namespace

TEST_CASE("binary SVM on a symmetric toy problem") {
  const SampleMatrix x = rows({{1, 0}, {2, 0}, {-1, 0}, {-2, 0}});
  const std::vector<int> y{1, 1, -1, -1};
  const BinarySvm svm = train_binary(x, y, SvmOptions{}, 1);
  for (int i = 0; i < 4; ++i) CHECK((svm.decision(std::span<const double>(x.row(i).data(), 2)) > 0) == (y[static_cast<std::size_t>(i)] > 0));
  const double n = std::hypot(svm.weights[0], svm.weights[1]);
  CHECK(svm.weights[0] / n == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(svm.weights[1] / n) < 1e-6);
}

TEST_CASE("binary SVM tolerates contradictory points") {
  const SampleMatrix x = rows({{1, 1}, {1, 1}, {2, 0}, {-2, 0}});
  const std::vector<int> y{1, -1, 1, -1};
  const BinarySvm svm = train_binary(x, y, SvmOptions{}, 2);
  for (double w : svm.weights) CHECK(std::isfinite(w));
  CHECK(std::isfinite(svm.bias));
  for (double o : svm.dual_objective) CHECK(std::isfinite(o));
}

TEST_CASE("binary SVM separates separable data and its objective never rises") {
  Rng rng(3);
  SampleMatrix x(60, 3);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) {
    y[static_cast<std::size_t>(i)] = i % 2 ? 1 : -1;
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal() * 0.5 + (j == 0 ? 2.0 * y[static_cast<std::size_t>(i)] : 0.0);
  }
  const BinarySvm svm = train_binary(x, y, SvmOptions{}, 4);
  int correct = 0;
  for (int i = 0; i < 60; ++i)
    correct += (svm.decision(std::span<const double>(x.row(i).data(), 3)) > 0) == (y[static_cast<std::size_t>(i)] > 0);
  CHECK(correct == 60);
  REQUIRE(svm.dual_objective.size() >= 2);
  for (std::size_t i = 1; i < svm.dual_objective.size(); ++i)
    CHECK(svm.dual_objective[i] <= svm.dual_objective[i - 1] + 1e-12);
}

TEST_CASE("binary SVM rejects one-sided labels") {
  const SampleMatrix x = rows({{1, 0}, {2, 0}});
  const std::vector<int> y{1, 1};
  CHECK_THROWS_AS(train_binary(x, y, SvmOptions{}, 5), Error);
}

TEST_CASE("one-vs-all on three clusters") {
  Rng rng(6);
  SampleMatrix x;
  std::vector<std::vector<std::string>> labels;
  cluster_data(10, rng, x, labels);
  const SvmModel m = train_ova(x, labels, SvmOptions{}, 7);
  CHECK(m.labels == std::vector<std::string>{"jump", "run", "walk"});
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    CHECK(m.predict(std::span<const double>(x.row(i).data(), 4)) == labels[static_cast<std::size_t>(i)][0]);
}

TEST_CASE("two-class one-vs-all is a model and its negation") {
  const SampleMatrix x = rows({{1, 0.2}, {2, -0.1}, {1.5, 0.4}, {-1, 0.3}, {-2, 0}, {-1.2, -0.5}});
  const std::vector<std::vector<std::string>> labels{{"p"}, {"p"}, {"p"}, {"q"}, {"q"}, {"q"}};
  const SvmModel m = train_ova(x, labels, SvmOptions{}, 8);
  REQUIRE(m.labels.size() == 2);
  for (std::size_t j = 0; j < 2; ++j) CHECK(m.weights[0][j] == doctest::Approx(-m.weights[1][j]).epsilon(1e-6));
  CHECK(m.bias[0] == doctest::Approx(-m.bias[1]).epsilon(1e-6));
}

TEST_CASE("multilabel entry is positive in each of its classes") {
  const SampleMatrix x = rows({{1, 0}, {0, 1}, {1, 1}, {-1, -1}});
  const std::vector<std::vector<std::string>> labels{{"a"}, {"b"}, {"a", "b"}, {"c"}};
  const SvmModel m = train_ova(x, labels, SvmOptions{}, 9);
  const std::vector<double> both{1, 1};
  const auto s = m.scores(both);
  CHECK(s[0] > 0);
  CHECK(s[1] > 0);
  CHECK(s[2] < 0);
}

TEST_CASE("scaling features with inverse C keeps the predicted class") {
  Rng rng(10);
  SampleMatrix x;
  std::vector<std::vector<std::string>> labels;
  cluster_data(8, rng, x, labels);
  const SvmModel base = train_ova(x, labels, SvmOptions{}, 11);
  for (double k : {0.1, 10.0}) {
    SvmOptions opt;
    opt.c = 100.0 / (k * k);
    const SampleMatrix xs = x * k;
    const SvmModel scaled = train_ova(xs, labels, opt, 11);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      CHECK(scaled.predict(std::span<const double>(xs.row(i).data(), 4)) ==
            base.predict(std::span<const double>(x.row(i).data(), 4)));
  }
}

TEST_CASE("mean accuracy") {
  const std::vector<std::string> classes{"A", "B"};
  const std::vector<std::string> truth{"A", "A", "B", "B"};
  CHECK(mean_accuracy(truth, truth, classes).value == 1.0);
  const std::vector<std::string> half{"A", "B", "B", "B"};
  CHECK(mean_accuracy(half, truth, classes).value == 0.75);
  const std::vector<std::string> wrong{"B", "B", "A", "A"};
  CHECK(mean_accuracy(wrong, truth, classes).value == 0.0);
}

TEST_CASE("mean accuracy skips classes without test samples") {
  const std::vector<std::string> classes{"A", "B", "C"};
  const std::vector<std::string> truth{"A", "B"};
  const auto r = mean_accuracy(truth, truth, classes);
  CHECK(r.value == 1.0);
  CHECK(r.per_class.count("C") == 0);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("average precision") {
  const std::vector<double> s{0.9, 0.8, 0.1};
  const bool pos[] = {true, false, true};
  CHECK(average_precision(s, pos) == doctest::Approx(5.0 / 6).epsilon(1e-12));
  const bool perfect[] = {true, true, false};
  CHECK(average_precision(s, perfect) == 1.0);
  const bool none[] = {false, false, false};
  CHECK(std::isnan(average_precision(s, none)));
}

TEST_CASE("average precision breaks ties by input order") {
  const std::vector<double> s{0.5, 0.5};
  const bool first[] = {true, false};
  const bool second[] = {false, true};
  CHECK(average_precision(s, first) == 1.0);
  CHECK(average_precision(s, second) == 0.5);
}

TEST_CASE("metrics do not depend on entry order") {
  Rng rng(12);
  const std::vector<std::string> classes{"a", "b", "c"};
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<std::string>> labels;
  std::vector<std::string> truth, pred;
  for (int i = 0; i < 30; ++i) {
    scores.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    labels.push_back({classes[rng.index(3)]});
    truth.push_back(labels.back()[0]);
    pred.push_back(classes[rng.index(3)]);
  }
  const double map = mean_average_precision(scores, labels, classes).value;
  const double macc = mean_accuracy(pred, truth, classes).value;

  std::vector<std::size_t> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
  std::vector<std::vector<double>> s2;
  std::vector<std::vector<std::string>> l2;
  std::vector<std::string> t2, p2;
  for (std::size_t i : perm) {
    s2.push_back(scores[i]);
    l2.push_back(labels[i]);
    t2.push_back(truth[i]);
    p2.push_back(pred[i]);
  }
  CHECK(mean_average_precision(s2, l2, classes).value == doctest::Approx(map).epsilon(1e-12));
  CHECK(mean_accuracy(p2, t2, classes).value == doctest::Approx(macc).epsilon(1e-12));
}

TEST_CASE("leave-one-group-out fold counts") {
  DatasetManifest m;
  for (int g = 0; g < 25; ++g)
    for (int i = 0; i < 3; ++i) m.entries.push_back(entry("v" + std::to_string(g) + "_" + std::to_string(i), "g" + std::to_string(g)));
  CHECK(leave_one_group_out(m).size() == 25);

  DatasetManifest one;
  one.entries = {entry("a", "g"), entry("b", "g")};
  CHECK_THROWS_AS(leave_one_group_out(one), Error);
}

TEST_CASE("leave-one-group-out folds partition the entries") {
  DatasetManifest m;
  int n = 0;
  for (int size : {3, 2, 4})
    for (int i = 0; i < size; ++i) m.entries.push_back(entry("v" + std::to_string(n++), "g" + std::to_string(size)));
  const auto folds = leave_one_group_out(m);
  REQUIRE(folds.size() == 3);
  std::vector<std::size_t> sizes;
  std::multiset<std::size_t> tested;
  for (const auto& f : folds) {
    sizes.push_back(f.test.size());
    CHECK(f.train.size() + f.test.size() == m.entries.size());
    std::set<std::size_t> tr(f.train.begin(), f.train.end());
    for (std::size_t i : f.test) {
      CHECK(tr.count(i) == 0);
      tested.insert(i);
    }
  }
  CHECK(sizes == std::vector<std::size_t>{2, 3, 4});
  CHECK(tested.size() == m.entries.size());
  for (std::size_t i = 0; i < m.entries.size(); ++i) CHECK(tested.count(i) == 1);
}

TEST_CASE("manifest parsing") {
  const auto m = parse_manifest(
      "{\"id\":\"a\",\"path\":\"a.lrep\",\"labels\":[\"x\",\"y\"],\"group\":\"g1\",\"split\":\"train\"}\n"
      "\n"
      "{\"id\":\"b\",\"labels\":\"z\",\"group\":2}\n");
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].labels == std::vector<std::string>{"x", "y"});
  CHECK(m.entries[1].labels == std::vector<std::string>{"z"});
  CHECK(m.entries[1].group == "2");
  CHECK(m.classes() == std::vector<std::string>{"x", "y", "z"});

  try {
    parse_manifest("{\"id\":\"a\",\"labels\":[\"x\"]}\n{\"id\":\"a\",\"labels\":[\"x\"]}\n");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kManifestMismatch);
  }
  CHECK_THROWS_AS(parse_manifest("not json\n"), Error);
}

TEST_CASE("model survives a JSON round trip") {
  Rng rng(13);
  SampleMatrix x;
  std::vector<std::vector<std::string>> labels;
  cluster_data(5, rng, x, labels);
  const SvmModel m = train_ova(x, labels, SvmOptions{}, 14);
  const SvmModel back = model_from_json(model_to_json(m));
  CHECK(back.labels == m.labels);
  CHECK(back.weights == m.weights);
  CHECK(back.bias == m.bias);
}
