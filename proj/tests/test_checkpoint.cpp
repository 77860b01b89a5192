#include <doctest.h>

#include <fstream>

#include "pointaugment/checkpoint.hpp"
#include "pointaugment/errors.hpp"
#include "support.hpp"

using namespace pointaugment;
using namespace testing;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::string& b) {
  std::ofstream(p, std::ios::binary) << b;
}

}  // namespace

TEST_CASE("checkpoint round trip restores every field") {
  const Dataset ds = tiny_dataset();
  TrainConfig cfg = tiny_train_config();
  cfg.classifier_optimizer = OptimizerKind::SgdMomentum;
  const TrainingState s = train(ds, cfg);
  REQUIRE(s.pool.size() > 0);
  const fs::path dir = scratch_dir("ckpt");
  save_checkpoint(s, dir / "a.bin");
  const TrainingState back = load_checkpoint(dir / "a.bin");
  CHECK(back == s);
  CHECK(back.augmentor.hash() == s.augmentor.hash());
  CHECK_FALSE(fs::exists(dir / "a.bin.tmp"));
}

TEST_CASE("damaged checkpoints are rejected") {
  const Dataset ds = tiny_dataset();
  const TrainingState s = train(ds, tiny_train_config());
  const fs::path dir = scratch_dir("ckpt_bad");
  save_checkpoint(s, dir / "good.bin");
  const std::string bytes = read_bytes(dir / "good.bin");

  write_bytes(dir / "trunc.bin", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(dir / "trunc.bin"), LoadError);

  std::string flipped = bytes;
  flipped[bytes.size() / 3] ^= 0x40;
  write_bytes(dir / "flip.bin", flipped);
  CHECK_THROWS_AS(load_checkpoint(dir / "flip.bin"), LoadError);

  std::string magic = bytes;
  magic[0] = 'X';
  write_bytes(dir / "magic.bin", magic);
  CHECK_THROWS_AS(load_checkpoint(dir / "magic.bin"), LoadError);

  write_bytes(dir / "empty.bin", "");
  CHECK_THROWS_AS(load_checkpoint(dir / "empty.bin"), LoadError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), LoadError);
}

TEST_CASE("a resumed run matches the unbroken run") {
  const Dataset ds = tiny_dataset();
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 4;
  const TrainingState full = train(ds, cfg);

  Trainer first(ds, cfg);
  first.run(2);
  const fs::path dir = scratch_dir("ckpt_resume");
  save_checkpoint(first.state(), dir / "mid.bin");
  Trainer second(ds, load_checkpoint(dir / "mid.bin"));
  second.run(4);
  CHECK(second.state() == full);
}
