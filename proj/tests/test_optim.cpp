#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "eegdiff/errors.hpp"
#include "eegdiff/nn/checkpoint.hpp"
#include "eegdiff/nn/layers.hpp"
#include "eegdiff/nn/optim.hpp"

using namespace eegdiff;
using namespace eegdiff::nn;

TEST_CASE("first Adam step on a scalar moves by lr") {
  auto w = Tensor::from({1}, {0.0}, true);
  w.mutable_grad()[0] = 1.0;
  AdamState st;
  st.lr = 0.1;
  std::vector<NamedTensor> params{{"w", w}};
  adam_step(params, st);
  // m_hat = 1, v_hat = 1 -> step = lr * 1 / (1 + eps)
  CHECK(w.data()[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(st.step_count == 1);
  CHECK(w.grad()[0] == 1.0);
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  auto w = Tensor::from({2}, {0.5, -0.5}, true);
  w.mutable_grad();
  AdamState st;
  std::vector<NamedTensor> params{{"w", w}};
  adam_step(params, st);
  CHECK(w.data()[0] == 0.5);
  CHECK(w.data()[1] == -0.5);
  CHECK(st.step_count == 1);
}

TEST_CASE("missing gradient is rejected by name") {
  auto w = Tensor::from({1}, {0.0}, true);
  AdamState st;
  std::vector<NamedTensor> params{{"enc.weight", w}};
  CHECK_THROWS_WITH_AS(adam_step(params, st), doctest::Contains("enc.weight"), std::invalid_argument);
}

TEST_CASE("Adam matches a hand-rolled reference over several steps") {
  std::vector<double> ref{0.3, -1.2};
  std::vector<double> m(2, 0.0), v(2, 0.0);
  auto w = Tensor::from({2}, ref, true);
  AdamState st;
  st.lr = 0.01;
  std::vector<NamedTensor> params{{"w", w}};
  for (int step = 1; step <= 5; ++step) {
    w.zero_grad();
    backward(sum(mul(mul(w, w), w)));  // grad = 3 w^2
    adam_step(params, st);
    for (int i = 0; i < 2; ++i) {
      const double g = 3.0 * ref[i] * ref[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1.0 - std::pow(0.9, step));
      const double vh = v[i] / (1.0 - std::pow(0.999, step));
      ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(w.data()[0] == doctest::Approx(ref[0]).epsilon(1e-12));
    CHECK(w.data()[1] == doctest::Approx(ref[1]).epsilon(1e-12));
  }
}

TEST_CASE("lr schedule halves every interval") {
  CHECK(lr_schedule(1e-4, 0, 20) == 1e-4);
  CHECK(lr_schedule(1e-4, 19, 20) == 1e-4);
  CHECK(lr_schedule(1e-4, 20, 20) == 5e-5);
  CHECK(lr_schedule(1e-4, 199, 20) == doctest::Approx(1e-4 * std::pow(0.5, 9)).epsilon(1e-15));
}

TEST_CASE("identical runs give bit-identical parameters") {
  auto run = [] {
    Rng rng(9);
    Linear lin("lin", 4, 3, rng);
    ParamSet set;
    set.add(lin.params());
    AdamState st;
    st.lr = 1e-2;
    auto x = Tensor::from({2, 4}, rng.normal_vector(8));
    for (int i = 0; i < 10; ++i) {
      zero_grad(set.params);
      backward(mean(mul(lin.forward(x), lin.forward(x))));
      adam_step(set.params, st);
    }
    std::vector<double> out;
    for (auto& p : set.params) out.insert(out.end(), p.tensor.data().begin(), p.tensor.data().end());
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint round trip with optimizer state") {
  Rng rng(3);
  Conv1d conv("enc.conv", 2, 3, 3, 1, 1, rng);
  BatchNorm1d bn("enc.bn", 3);
  ParamSet set;
  set.add(conv.params());
  bn.collect(set);
  auto x = Tensor::from({2, 2, 8}, rng.normal_vector(32));
  backward(mean(bn.forward(conv.forward(x), Mode::train)));
  AdamState st;
  adam_step(set.params, st);

  const auto p = std::filesystem::temp_directory_path() / "eegdiff_ckpt.ednn";
  save_checkpoint(p, set, &st);
  auto ckpt = load_checkpoint(p);
  REQUIRE(ckpt.optimizer.has_value());
  CHECK(ckpt.optimizer->step_count == 1);
  CHECK(ckpt.optimizer->names == st.names);

  Rng other(99);
  Conv1d conv2("enc.conv", 2, 3, 3, 1, 1, other);
  BatchNorm1d bn2("enc.bn", 3);
  ParamSet set2;
  set2.add(conv2.params());
  bn2.collect(set2);
  restore(ckpt, set2);
  for (std::size_t i = 0; i < set.params.size(); ++i)
    for (std::size_t j = 0; j < set.params[i].tensor.numel(); ++j)
      CHECK(set2.params[i].tensor.data()[j] == static_cast<float>(set.params[i].tensor.data()[j]));
  CHECK(bn2.running_mean().data()[0] == static_cast<float>(bn.running_mean().data()[0]));

  Conv1d wrong("enc.conv", 2, 4, 3, 1, 1, other);
  ParamSet set3;
  set3.add(wrong.params());
  CHECK_THROWS_WITH_AS(restore(ckpt, set3), doctest::Contains("enc.conv.weight"), DataError);
}
