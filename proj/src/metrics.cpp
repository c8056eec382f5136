#include "ham/metrics.hpp"

#include <cmath>
#include <sstream>

namespace ham {

double dc_score(const ComponentScores& s) {
    if (!std::isfinite(s.dino) || !std::isfinite(s.clip_t))
        throw ArgumentError("dc_score: dino and clip_t must be finite");
    return (s.dino + 1.0) * (s.clip_t + 1.0);
}

double cc_score(const ComponentScores& s) {
    if (!std::isfinite(s.clip_i) || !std::isfinite(s.clip_t))
        throw ArgumentError("cc_score: clip_i and clip_t must be finite");
    return (s.clip_i + 1.0) * (s.clip_t + 1.0);
}

double artfid_form(double fid, double lpips) {
    if (!(fid >= 0.0) || !(lpips >= 0.0))
        throw ArgumentError("artfid_form: fid and lpips must be non-negative");
    return (1.0 + fid) * (1.0 + lpips);
}

double channel_stat_distance(const Tensor& a, const Tensor& b,
                             std::size_t channel_axis) {
    const auto sa = channel_stats(a, channel_axis);
    const auto sb = channel_stats(b, channel_axis);
    if (sa.mean.size() != sb.mean.size())
        throw ShapeError("channel_stat_distance: channel count mismatch");
    double acc = 0.0;
    for (std::size_t c = 0; c < sa.mean.size(); ++c) {
        const double dm = static_cast<double>(sa.mean[c]) - sb.mean[c];
        const double ds = static_cast<double>(sa.std[c]) - sb.std[c];
        acc += dm * dm + ds * ds;
    }
    return std::sqrt(acc);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no, const char* column) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw IoError("scores csv: line " + std::to_string(line_no) +
                      ", column " + column + ": not a number: '" + cell + "'");
    }
    if (pos != cell.size())
        throw IoError("scores csv: line " + std::to_string(line_no) +
                      ", column " + column + ": trailing junk in '" + cell + "'");
    return v;
}

} // namespace

std::vector<ScoreRow> parse_scores_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<ScoreRow> rows;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (!header_seen) {
            if (cells != std::vector<std::string>{"method", "dino", "clip_i", "clip_t",
                                                  "fid", "lpips"})
                throw IoError("scores csv: line " + std::to_string(line_no) +
                              ": expected header method,dino,clip_i,clip_t,fid,lpips");
            header_seen = true;
            continue;
        }
        if (cells.size() != 6)
            throw IoError("scores csv: line " + std::to_string(line_no) +
                          ": expected 6 cells, got " + std::to_string(cells.size()));
        ScoreRow r;
        r.method = cells[0];
        r.scores.dino = parse_cell(cells[1], line_no, "dino");
        r.scores.clip_i = parse_cell(cells[2], line_no, "clip_i");
        r.scores.clip_t = parse_cell(cells[3], line_no, "clip_t");
        if (!cells[4].empty()) r.scores.fid = parse_cell(cells[4], line_no, "fid");
        if (!cells[5].empty()) r.scores.lpips = parse_cell(cells[5], line_no, "lpips");
        rows.push_back(std::move(r));
    }
    if (!header_seen) throw IoError("scores csv: missing header");
    return rows;
}

std::string render_scores_csv(const std::vector<ScoreRow>& rows) {
    std::ostringstream os;
    os << "method,dino,clip_i,clip_t,fid,lpips,dc,cc,artfid\n";
    os.setf(std::ios::fixed);
    os.precision(6);
    for (const auto& r : rows) {
        os << r.method << "," << r.scores.dino << "," << r.scores.clip_i << ","
           << r.scores.clip_t << ",";
        if (r.scores.fid) os << *r.scores.fid;
        os << ",";
        if (r.scores.lpips) os << *r.scores.lpips;
        os << "," << dc_score(r.scores) << "," << cc_score(r.scores) << ",";
        if (r.scores.fid && r.scores.lpips)
            os << artfid_form(*r.scores.fid, *r.scores.lpips);
        os << "\n";
    }
    return os.str();
}

const std::vector<ReferenceRow>& reference_table() {
    static const std::vector<ReferenceRow> rows = {
        //  method            fid     lpips  dino   clip_i clip_t  artfid  dc     cc
        {"DDIM",             17.939, 0.645, 0.278, 0.493, 0.192, 31.149, 1.524, 1.780},
        {"ControlNet",       13.472, 0.710, 0.513, 0.583, 0.210, 24.751, 1.831, 1.916},
        {"StyTR2",           10.433, 0.527, 0.433, 0.487, 0.206, 17.460, 1.729, 1.794},
        {"InstructPix2Pix",  17.657, 0.518, 0.575, 0.620, 0.211, 28.319, 1.908, 1.963},
        {"InstantStyle",     15.249, 0.677, 0.474, 0.604, 0.198, 27.244, 1.765, 1.921},
        {"CSGO",             15.207, 0.673, 0.482, 0.581, 0.197, 27.116, 1.775, 1.893},
        {"StyleID",           8.273, 0.635, 0.544, 0.619, 0.213, 15.161, 1.873, 1.964},
        {"STAM",              9.269, 0.650, 0.531, 0.608, 0.221, 16.941, 1.869, 1.963},
        {"AttDistillation",   8.926, 0.629, 0.541, 0.615, 0.219, 16.170, 1.878, 1.969},
        {"DiffArtist",        9.641, 0.520, 0.629, 0.626, 0.220, 16.174, 1.987, 1.984},
        {"HAM",               9.244, 0.479, 0.728, 0.682, 0.223, 15.151, 2.113, 2.057},
    };
    return rows;
}

} // namespace ham
