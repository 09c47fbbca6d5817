#pragma once

// CSV serialization of training logs.
//
// log.csv (one row per update, 6 significant digits):
//   timestep,episode,episode_return,mean_return_100,r_vwr_mean,sigma_delta_mean,
//   policy_loss,value_loss_short,value_loss_long,entropy,hotwire_active
// episodes.csv: episode,end_timestep,length,episode_return
// steps.csv:    timestep,episode,reward,r_vwr,sigma_delta,terminal,hotwired
// episodes.csv and steps.csv use shortest round-trip formatting.

#include <iosfwd>
#include <string>
#include <vector>

#include "vwrrl/agent.hpp"

namespace vwrrl {

/// "%.6g"
std::string format_sig6(double v);

void write_update_csv(std::ostream& out, const std::vector<UpdateRecord>& updates);
void write_episode_csv(std::ostream& out, const std::vector<EpisodeRecord>& episodes);
void write_step_csv(std::ostream& out, const std::vector<StepRecord>& steps);

std::vector<EpisodeRecord> read_episode_csv(std::istream& in);
std::vector<StepRecord> read_step_csv(std::istream& in);

/// Parsed log.csv as a header plus rows of cells, values left as text.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Throws InputError if the column does not exist.
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Replays a step trace through the VWR pipeline and returns the number of
/// steps whose logged r_vwr differs from the recomputed one by more than
/// `tolerance` (relative to max(1, |r_vwr|)).
std::size_t audit_vwr_stream(const std::vector<StepRecord>& steps, const TrainConfig& cfg,
                             double tolerance = 1e-9);

}  // namespace vwrrl
