// Benchmark: OpenMP path kernels against the serial reference implementations.
// Also asserts that both produce identical bytes, since that is the contract
// that makes the parallel kernels safe to prefer.

#include <chrono>
#include <cstdio>
#include <string>

#include "isomarket/ctsmkt.hpp"

using namespace isomarket;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t paths = 20'000;
  std::size_t steps = 512;
  if (argc > 1) paths = static_cast<std::size_t>(std::stoul(argv[1]));
  if (argc > 2) steps = static_cast<std::size_t>(std::stoul(argv[2]));

  auto vol = linalg::Matrix::identity(1);
  vol(0, 0) = 0.2;
  const auto gbm = ctsmkt::make_gbm({0.07}, vol, 0.02, 1.0, {100.0});
  const double dt = gbm.horizon / static_cast<double>(steps);

  std::printf("paths=%zu steps=%zu\n", paths, steps);

  auto start = Clock::now();
  const auto par = ctsmkt::simulate(gbm, dt, steps, paths, 42);
  const double t_par = seconds_since(start);

  start = Clock::now();
  const auto ser = ctsmkt::reference::simulate(gbm, dt, steps, paths, 42);
  const double t_ser = seconds_since(start);

  const bool same = par.states == ser.states && par.increments == ser.increments;
  std::printf("simulate: parallel %.3fs  serial %.3fs  speedup %.2fx  identical=%s\n",
              t_par, t_ser, t_ser / t_par, same ? "yes" : "NO");

  ctsmkt::ClaimSpec call;
  call.kind = ctsmkt::ClaimSpec::Kind::call;
  call.asset = 0;
  call.strike = 100.0;

  start = Clock::now();
  const auto price_par = ctsmkt::price_mc(gbm, call, dt, paths, 42);
  const double t_price_par = seconds_since(start);

  start = Clock::now();
  const auto price_ser = ctsmkt::reference::price_mc(gbm, call, dt, paths, 42);
  const double t_price_ser = seconds_since(start);

  const bool same_price = price_par.price == price_ser.price &&
                          price_par.std_error == price_ser.std_error;
  std::printf("price_mc: parallel %.3fs  serial %.3fs  speedup %.2fx  identical=%s\n",
              t_price_par, t_price_ser, t_price_ser / t_price_par,
              same_price ? "yes" : "NO");
  std::printf("call price %.6f (se %.6f)\n", price_par.price, price_par.std_error);

  return (same && same_price) ? 0 : 1;
}
