#pragma once

namespace CLI {
class App;
}

namespace emtrack::cli {

void setup_synth(CLI::App& app);
void setup_train(CLI::App& app);
void setup_track(CLI::App& app);
void setup_eval(CLI::App& app);

}  // namespace emtrack::cli
