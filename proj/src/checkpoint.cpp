#include "ham/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace ham {

namespace {

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (c == '/' || c == '\\') c = '_';
    return out;
}

} // namespace

void save_checkpoint(const std::string& dir, const Denoiser& model) {
    fs::create_directories(dir);
    const DenoiserConfig& c = model.config();
    std::ostringstream manifest;
    manifest << "format ham-checkpoint-v1\n";
    manifest << "latent_channels " << c.latent_channels << "\n";
    manifest << "latent_size " << c.latent_size << "\n";
    manifest << "width " << c.width << "\n";
    manifest << "num_blocks " << c.num_blocks << "\n";
    manifest << "heads " << c.heads << "\n";
    manifest << "context_tokens " << c.context_tokens << "\n";
    manifest << "context_dim " << c.context_dim << "\n";
    manifest << "patch_size " << c.patch_size << "\n";
    manifest << "num_conditions " << c.num_conditions << "\n";
    for (const auto& [name, t] : model.params()) {
        const std::string file = sanitize(name) + ".hamt";
        save_hamt((fs::path(dir) / file).string(), t);
        manifest << "param " << name << " " << file << " ";
        for (std::size_t i = 0; i < t.shape.size(); ++i) {
            if (i) manifest << "x";
            manifest << t.shape[i];
        }
        manifest << "\n";
    }
    // write-temp-then-rename so a manifest never names missing files
    const fs::path tmp = fs::path(dir) / "manifest.txt.tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw IoError("checkpoint: cannot write " + tmp.string());
        f << manifest.str();
    }
    fs::rename(tmp, fs::path(dir) / "manifest.txt");
}

Denoiser load_checkpoint(const std::string& dir) {
    const fs::path manifest = fs::path(dir) / "manifest.txt";
    std::ifstream f(manifest);
    if (!f) throw IoError("checkpoint: cannot open " + manifest.string());

    DenoiserConfig cfg;
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    bool format_ok = false;
    while (std::getline(f, line)) {
        std::istringstream is(line);
        std::string key;
        if (!(is >> key)) continue;
        if (key == "format") {
            std::string v;
            is >> v;
            format_ok = (v == "ham-checkpoint-v1");
        } else if (key == "param") {
            std::string name, file;
            if (!(is >> name >> file))
                throw IoError("checkpoint: malformed param line: " + line);
            entries.emplace_back(name, file);
        } else {
            std::size_t v;
            if (!(is >> v)) throw IoError("checkpoint: malformed line: " + line);
            if (key == "latent_channels") cfg.latent_channels = v;
            else if (key == "latent_size") cfg.latent_size = v;
            else if (key == "width") cfg.width = v;
            else if (key == "num_blocks") cfg.num_blocks = v;
            else if (key == "heads") cfg.heads = v;
            else if (key == "context_tokens") cfg.context_tokens = v;
            else if (key == "context_dim") cfg.context_dim = v;
            else if (key == "patch_size") cfg.patch_size = v;
            else if (key == "num_conditions") cfg.num_conditions = v;
            else throw IoError("checkpoint: unknown manifest key: " + key);
        }
    }
    if (!format_ok) throw IoError("checkpoint: missing or bad format line in " + manifest.string());

    Denoiser model(cfg);
    model.init_params(0);
    for (const auto& [name, file] : entries) {
        Tensor t = load_hamt((fs::path(dir) / file).string());
        auto it = model.params().find(name);
        if (it == model.params().end())
            throw ConfigError("checkpoint: parameter " + name + " does not belong to this config");
        if (it->second.shape != t.shape)
            throw ConfigError("checkpoint: shape mismatch for " + name + ": file has " +
                              shape_str(t.shape) + ", config expects " +
                              shape_str(it->second.shape));
        it->second = std::move(t);
    }
    return model;
}

} // namespace ham
