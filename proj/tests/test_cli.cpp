// Copyright 2026 The erbm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <doctest.h>

#include "synthetic.hpp"

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string command = std::string(ERBM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_CASE("exit codes") {
  const fs::path dir = fs::temp_directory_path() / "erbm_test_cli";
  fs::remove_all(dir);
  const auto data = erbm::testing::write_stroke_dataset(dir, "strokes", 64, 16).string();
  const std::string small = " --dataset " + data + " --reps 1 --epochs 1 --batch-size 16 --hidden 8 --no-images --quiet --out " +
                            (dir / "runs").string();

  CHECK(run("train" + small) == 0);
  CHECK(run("--help") == 0);
  CHECK(run("train --arch Mz" + small) == 1);
  CHECK(run("train --p 1.5" + small) == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("train --dataset " + (dir / "absent").string()) == 2);
  CHECK(run("compare " + (dir / "absent").string() + " " + (dir / "absent").string()) == 2);
  CHECK(run("train --lr 1e300" + small) == 3);
  CHECK(run("export-figures " + (dir / "runs").string()) == 0);
  fs::remove_all(dir);
}

}  // namespace
