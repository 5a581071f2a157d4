#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oneshot/core/ops.hpp"
#include "oneshot/core/params.hpp"
#include "oneshot/core/random.hpp"

using namespace oneshot::core;

TEST_CASE("sgd_step") {
  SgdConfig cfg{0.1, 64};

  SUBCASE("single update") {
    ParamStore ps;
    Tensor& theta = ps.add("theta", Tensor::scalar(1.0));
    theta.grad()[0] = 2.0;
    sgd_step(ps, cfg);
    CHECK(theta.item() == doctest::Approx(0.8));
    CHECK(theta.grad()[0] == 0.0);
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    ParamStore ps;
    Tensor& theta = ps.add("theta", Tensor({3}, {1, 2, 3}));
    theta.grad();
    sgd_step(ps, cfg);
    CHECK(theta[0] == 1.0);
    CHECK(theta[2] == 3.0);
  }
  SUBCASE("two steps on half theta squared") {
    ParamStore ps;
    Tensor& theta = ps.add("theta", Tensor::scalar(1.0));
    for (int i = 0; i < 2; ++i) {
      Tape tape;
      Tensor loss = scale(square(theta, &tape), 0.5, &tape);
      tape.backward(loss);
      sgd_step(ps, cfg);
    }
    CHECK(theta.item() == doctest::Approx(0.81).epsilon(1e-15));
  }
  SUBCASE("missing gradient is rejected") {
    ParamStore ps;
    ps.add("theta", Tensor::scalar(1.0));
    CHECK_THROWS_AS(sgd_step(ps, cfg), std::logic_error);
  }
  SUBCASE("buffers are not updated") {
    ParamStore ps;
    ps.add("w", Tensor::scalar(1.0)).grad()[0] = 1.0;
    Tensor& buf = ps.add("running", Tensor::scalar(5.0), false);
    sgd_step(ps, cfg);
    CHECK(buf.item() == 5.0);
  }
  CHECK_THROWS(validate(SgdConfig{0.0, 64}));
  CHECK_THROWS(validate(SgdConfig{0.1, 0}));
}

TEST_CASE("param store names and shapes") {
  ParamStore ps;
  ps.add("a", Tensor({2, 2}));
  CHECK_THROWS_AS(ps.add("a", Tensor({1})), std::invalid_argument);
  CHECK_THROWS_AS(ps.assign("a", Tensor({4})), std::invalid_argument);
  CHECK_THROWS_AS(ps.get("missing"), std::out_of_range);
  ParamStore copy = ps.clone();
  copy.get("a")[0] = 7.0;
  CHECK(ps.get("a")[0] == 0.0);
}

TEST_CASE("checkpoint round trip and layout") {
  Rng rng(4);
  ParamStore ps;
  ps.add("conv1.weight", randn(rng, {4, 1, 5, 5}));
  ps.add("bn1.running_var", Tensor({4}, 1.0), false);
  const auto path = std::filesystem::temp_directory_path() / "oneshot_ckpt_test.bin";
  save_checkpoint(path, ps);

  std::ifstream is(path, std::ios::binary);
  char magic[5];
  is.read(magic, 5);
  CHECK(std::string(magic, 5) == "SIMD1");
  std::uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), 4);
  CHECK(version == 1);
  std::uint32_t name_len = 0;
  is.read(reinterpret_cast<char*>(&name_len), 4);
  CHECK(name_len == std::string("conv1.weight").size());
  const auto expected_size = 5 + 4 + (4 + 12 + 4 + 4 * 8 + 100 * 8) + (4 + 15 + 4 + 8 + 4 * 8);
  CHECK(std::filesystem::file_size(path) == static_cast<std::uintmax_t>(expected_size));

  ParamStore target;
  target.add("conv1.weight", Tensor({4, 1, 5, 5}));
  target.add("bn1.running_var", Tensor({4}), false);
  load_checkpoint(path, target);
  for (std::size_t i = 0; i < 100; ++i) CHECK(target.get("conv1.weight")[i] == ps.get("conv1.weight")[i]);
  CHECK(target.get("bn1.running_var")[3] == 1.0);

  ParamStore wrong;
  wrong.add("conv1.weight", Tensor({4, 1, 3, 3}));
  wrong.add("bn1.running_var", Tensor({4}), false);
  CHECK_THROWS(load_checkpoint(path, wrong));
  ParamStore extra = target.clone();
  extra.add("more", Tensor({1}));
  CHECK_THROWS(load_checkpoint(path, extra));
  std::filesystem::remove(path);
}
