// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// Journal-derived core state: one fold function used both live and on replay,
// plus the read-side queries and export documents.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aeos/campaign.hpp"
#include "aeos/journal.hpp"

namespace aeos {

struct CoreState {
    std::map<std::string, CampaignState> campaigns;
    /// Campaign ids in creation order.
    std::vector<std::string> order;
    /// Highest n seen in a "c-<n>" id.
    std::uint64_t campaign_counter = 0;
    /// Planner state as it was before each campaign's latest proposal, so an
    /// interrupted experiment's proposal can be issued again after recovery.
    std::map<std::string, PlannerState> planner_before_last;

    const CampaignState* find(const std::string& id) const;
};

// Body builders for the campaign entry kinds.
Value::Record campaign_created_body(const CampaignSpec& spec);
Value::Record status_changed_body(const std::string& campaign_id, CampaignStatus status,
                                  std::optional<StopReason> reason = std::nullopt,
                                  std::optional<std::int64_t> started_ms = std::nullopt,
                                  const PlannerState* planner = nullptr, const std::string& note = {});
Value::Record experiment_appended_body(const ExperimentRecord& e, const PlannerState& planner);
Value::Record experiment_updated_body(const ExperimentRecord& e);

/// Folds one entry into the state. Throws JournalError(CorruptEntry) when the
/// entry contradicts the state it is applied to.
void apply(CoreState& state, const JournalEntry& entry);

struct Recovery {
    CoreState state;
    /// Campaigns that were RUNNING when the journal ends.
    std::vector<std::string> interrupted;
};

/// Rebuilds state from the full journal. Campaigns that were RUNNING come
/// back PAUSED.
Recovery replay(const std::vector<JournalEntry>& entries);

struct ExperimentQuery {
    std::optional<ExperimentStatus> status;
    /// Half-open index range [from, to).
    std::optional<std::int64_t> from;
    std::optional<std::int64_t> to;
};

std::vector<ExperimentRecord> query_experiments(const CampaignState& c, const ExperimentQuery& q);

enum class ExportFormat { Csv, Json };

std::optional<ExportFormat> export_format_from(std::string_view s) noexcept;

/// CSV: header index,status,<dimensions>,objective,started,ended; CRLF line
/// endings; RFC 4180 quoting. JSON: canonical list of experiment records.
std::string export_campaign(const CampaignState& c, ExportFormat format);

/// Opens the journal under `data_dir` read-only in spirit (a torn tail is
/// still truncated) and exports one campaign. Throws CampaignError
/// UnknownCampaign.
std::string export_from_journal(const std::filesystem::path& data_dir, const std::string& campaign_id,
                                ExportFormat format);

}  // namespace aeos
