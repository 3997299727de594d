// Generates the synthetic tone corpus used by the integration tests and the
// README walkthrough.
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "zrlab/toydata.hpp"
#include "zrlab/util.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthetic multi-speaker tone corpus generator"};
    std::string out_dir = "toy-corpus";
    std::uint64_t seed = 0;
    zrlab::ToyConfig cfg;
    app.add_option("--out-dir", out_dir, "corpus directory")->capture_default_str();
    app.add_option("--seed", seed, "RNG seed")->capture_default_str();
    app.add_option("--speakers", cfg.n_speakers, "speaker count")->capture_default_str();
    app.add_option("--phones", cfg.n_phones, "phone inventory size")->capture_default_str();
    app.add_option("--utterances", cfg.utterances_per_speaker, "utterances per speaker")
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        const zrlab::ToyDataset ds = zrlab::generate_toy_dataset(out_dir, cfg, seed);
        std::cout << "wrote " << ds.manifest.size() << " utterances to " << out_dir << "\n";
    } catch (const zrlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const zrlab::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
