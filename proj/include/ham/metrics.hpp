#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ham/tensor.hpp"

namespace ham {

// Pre-computed component scores for one method; the engine only owns the
// composite formulas, not the scoring networks.
struct ComponentScores {
    double dino = 0.0;
    double clip_i = 0.0;
    double clip_t = 0.0;
    std::optional<double> fid;
    std::optional<double> lpips;
};

// (DINO + 1) * (CLIP-T + 1)
double dc_score(const ComponentScores& s);

// (CLIP-I + 1) * (CLIP-T + 1)
double cc_score(const ComponentScores& s);

// (1 + FID) * (1 + LPIPS)
double artfid_form(double fid, double lpips);

// L2 distance between the concatenated per-channel (mean, std) vectors of
// two tensors; the desk-scale style-proximity proxy.
double channel_stat_distance(const Tensor& a, const Tensor& b,
                             std::size_t channel_axis = 0);

struct ScoreRow {
    std::string method;
    ComponentScores scores;
};

// CSV with header `method,dino,clip_i,clip_t,fid,lpips`; empty cells allowed
// for fid/lpips. Throws IoError naming the offending line / column.
std::vector<ScoreRow> parse_scores_csv(const std::string& text);

// Appends dc,cc,artfid columns (artfid blank when fid/lpips absent).
std::string render_scores_csv(const std::vector<ScoreRow>& rows);

// Reference rows with reported composite columns, for table-consistency
// checks. dc/cc are the published 3-decimal values.
struct ReferenceRow {
    const char* method;
    double fid, lpips, dino, clip_i, clip_t, artfid, dc, cc;
};

const std::vector<ReferenceRow>& reference_table();

} // namespace ham
