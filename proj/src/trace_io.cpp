#include "ham/modulation.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace ham {

void save_trace(const std::string& dir, const TeacherTrace& trace) {
    fs::create_directories(dir);
    std::ostringstream manifest;
    manifest << "format ham-trace-v1\n";
    for (const auto& [key, p] : trace.entries()) {
        const auto& [step, layer, kind_int] = key;
        const SiteKind kind = static_cast<SiteKind>(kind_int);
        const fs::path site_dir = fs::path(dir) / std::to_string(step) /
                                  std::to_string(layer) / site_kind_name(kind);
        fs::create_directories(site_dir);
        save_hamt((site_dir / "q.hamt").string(), p.q);
        save_hamt((site_dir / "k.hamt").string(), p.k);
        save_hamt((site_dir / "v.hamt").string(), p.v);
        manifest << "site " << step << " " << layer << " " << site_kind_name(kind) << "\n";
    }
    save_hamt((fs::path(dir) / "z_T.hamt").string(), trace.initial_latent());
    for (const auto& [step, z] : trace.step_latents()) {
        save_hamt((fs::path(dir) / ("latent_" + std::to_string(step) + ".hamt")).string(), z);
        manifest << "latent " << step << "\n";
    }
    std::ofstream f(fs::path(dir) / "manifest.txt");
    if (!f) throw IoError("trace: cannot write manifest in " + dir);
    f << manifest.str();
}

TeacherTrace load_trace(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest.txt");
    if (!f) throw IoError("trace: cannot open manifest in " + dir);
    TeacherTrace trace;
    std::string line;
    bool format_ok = false;
    while (std::getline(f, line)) {
        std::istringstream is(line);
        std::string key;
        if (!(is >> key)) continue;
        if (key == "format") {
            std::string v;
            is >> v;
            format_ok = (v == "ham-trace-v1");
        } else if (key == "site") {
            std::size_t step, layer;
            std::string kind_s;
            if (!(is >> step >> layer >> kind_s))
                throw IoError("trace: malformed site line: " + line);
            const SiteKind kind = kind_s == "self" ? SiteKind::self_attention
                                                   : SiteKind::cross_attention;
            const fs::path site_dir =
                fs::path(dir) / std::to_string(step) / std::to_string(layer) / kind_s;
            AttentionProjections p;
            p.q = load_hamt((site_dir / "q.hamt").string());
            p.k = load_hamt((site_dir / "k.hamt").string());
            p.v = load_hamt((site_dir / "v.hamt").string());
            trace.record(step, AttentionSiteId{layer, kind}, p);
        } else if (key == "latent") {
            std::size_t step;
            if (!(is >> step)) throw IoError("trace: malformed latent line: " + line);
            trace.record_latent(step, load_hamt(
                (fs::path(dir) / ("latent_" + std::to_string(step) + ".hamt")).string()));
        } else {
            throw IoError("trace: unknown manifest key: " + key);
        }
    }
    if (!format_ok) throw IoError("trace: missing or bad format line in " + dir);
    trace.set_initial_latent(load_hamt((fs::path(dir) / "z_T.hamt").string()));
    return trace;
}

} // namespace ham
