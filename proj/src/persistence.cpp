// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/persistence.hpp"

#include <charconv>

namespace aeos {

const CampaignState* CoreState::find(const std::string& id) const {
    auto it = campaigns.find(id);
    return it == campaigns.end() ? nullptr : &it->second;
}

Value::Record campaign_created_body(const CampaignSpec& spec) { return Value::Record{{"spec", spec.to_value()}}; }

Value::Record status_changed_body(const std::string& campaign_id, CampaignStatus status,
                                  std::optional<StopReason> reason, std::optional<std::int64_t> started_ms,
                                  const PlannerState* planner, const std::string& note) {
    Value::Record b{{"campaign_id", campaign_id}, {"status", to_string(status)}};
    if (reason) b.emplace("reason", to_string(*reason));
    if (started_ms) b.emplace("started_ms", *started_ms);
    if (planner) b.emplace("planner", to_value(*planner));
    if (!note.empty()) b.emplace("note", note);
    return b;
}

Value::Record experiment_appended_body(const ExperimentRecord& e, const PlannerState& planner) {
    return Value::Record{{"campaign_id", e.campaign_id}, {"experiment", e.to_value()}, {"planner", to_value(planner)}};
}

Value::Record experiment_updated_body(const ExperimentRecord& e) {
    return Value::Record{{"campaign_id", e.campaign_id}, {"experiment", e.to_value()}};
}

namespace {

[[noreturn]] void corrupt(const JournalEntry& e, const std::string& why) {
    throw JournalError(JournalErrc::CorruptEntry, "seq " + std::to_string(e.seq) + ": " + why);
}

CampaignState& campaign_of(CoreState& s, const JournalEntry& e) {
    auto it = e.body.find("campaign_id");
    if (it == e.body.end() || !it->second.is_text()) corrupt(e, "missing campaign_id");
    auto c = s.campaigns.find(it->second.as_text());
    if (c == s.campaigns.end()) corrupt(e, "unknown campaign " + it->second.as_text());
    return c->second;
}

void note_campaign_id(CoreState& s, const std::string& id) {
    if (id.size() < 3 || id.compare(0, 2, "c-") != 0) return;
    std::uint64_t n = 0;
    auto [p, ec] = std::from_chars(id.data() + 2, id.data() + id.size(), n);
    if (ec == std::errc{} && p == id.data() + id.size()) s.campaign_counter = std::max(s.campaign_counter, n);
}

void apply_unchecked(CoreState& s, const JournalEntry& e) {
    switch (e.kind) {
    case EntryKind::CampaignCreated: {
        auto spec = e.body.find("spec");
        if (spec == e.body.end()) corrupt(e, "missing spec");
        auto parsed = CampaignSpec::parse(spec->second);
        if (!parsed.value) corrupt(e, "unparsable campaign spec");
        const std::string id = parsed.value->campaign_id;
        if (id.empty() || s.campaigns.count(id)) corrupt(e, "bad or duplicate campaign id " + id);
        note_campaign_id(s, id);
        s.order.push_back(id);
        s.campaigns.emplace(id, CampaignState::fresh(std::move(*parsed.value)));
        break;
    }
    case EntryKind::CampaignStatusChanged: {
        auto& c = campaign_of(s, e);
        Value body(e.body);
        auto st = campaign_status_from(body.at("status").as_text());
        if (!st) corrupt(e, "unknown status");
        c.status = *st;
        if (const Value* r = body.find("reason")) {
            auto reason = stop_reason_from(r->as_text());
            if (!reason) corrupt(e, "unknown stop reason");
            c.stop_reason = *reason;
        }
        if (const Value* t = body.find("started_ms"); t && !c.started_ms) c.started_ms = t->as_int();
        if (const Value* p = body.find("planner")) c.planner = planner_state_from(*p);
        break;
    }
    case EntryKind::ExperimentAppended: {
        auto& c = campaign_of(s, e);
        Value body(e.body);
        auto rec = ExperimentRecord::from_value(body.at("experiment"));
        if (rec.index != static_cast<std::int64_t>(c.experiments.size())) corrupt(e, "experiment index out of order");
        s.planner_before_last[c.spec.campaign_id] = c.planner;
        c.planner = planner_state_from(body.at("planner"));
        c.experiments.push_back(std::move(rec));
        break;
    }
    case EntryKind::ExperimentUpdated: {
        auto& c = campaign_of(s, e);
        auto rec = ExperimentRecord::from_value(Value(e.body).at("experiment"));
        if (rec.index < 0 || rec.index >= static_cast<std::int64_t>(c.experiments.size()))
            corrupt(e, "update of an unknown experiment");
        auto idx = static_cast<std::size_t>(rec.index);
        c.experiments[idx] = std::move(rec);
        c.note_finished(idx);
        break;
    }
    case EntryKind::ModuleEvent: break;
    }
}

}  // namespace

void apply(CoreState& state, const JournalEntry& entry) {
    try {
        apply_unchecked(state, entry);
    } catch (const JournalError&) {
        throw;
    } catch (const std::exception& ex) {
        // Missing fields surface as null derefs or kind mismatches.
        corrupt(entry, ex.what());
    }
}

Recovery replay(const std::vector<JournalEntry>& entries) {
    Recovery r;
    for (const auto& e : entries) apply(r.state, e);
    for (const auto& id : r.state.order) {
        auto& c = r.state.campaigns.at(id);
        if (c.status == CampaignStatus::Running) {
            c.status = CampaignStatus::Paused;
            r.interrupted.push_back(id);
        }
    }
    return r;
}

std::vector<ExperimentRecord> query_experiments(const CampaignState& c, const ExperimentQuery& q) {
    std::vector<ExperimentRecord> out;
    for (const auto& e : c.experiments) {
        if (q.status && e.status != *q.status) continue;
        if (q.from && e.index < *q.from) continue;
        if (q.to && e.index >= *q.to) continue;
        out.push_back(e);
    }
    return out;
}

std::optional<ExportFormat> export_format_from(std::string_view s) noexcept {
    if (s == "csv") return ExportFormat::Csv;
    if (s == "json") return ExportFormat::Json;
    return std::nullopt;
}

namespace {

std::string csv_cell(std::string s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

std::string csv_text(const Value& v) {
    switch (v.kind()) {
    case Value::Kind::Null: return "";
    case Value::Kind::Boolean: return v.as_bool() ? "true" : "false";
    case Value::Kind::Integer: return std::to_string(v.as_int());
    case Value::Kind::Real: return format_real(v.as_real());
    case Value::Kind::Text: return v.as_text();
    default: return canonical_encode(v);
    }
}

}  // namespace

std::string export_campaign(const CampaignState& c, ExportFormat format) {
    if (format == ExportFormat::Json) {
        Value::List list;
        for (const auto& e : c.experiments) list.push_back(e.to_value());
        return canonical_encode(Value(std::move(list)));
    }

    std::string out;
    auto row = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out.push_back(',');
            out += csv_cell(cells[i]);
        }
        out += "\r\n";
    };
    std::vector<std::string> header{"index", "status"};
    for (const auto& d : c.spec.space) header.push_back(d.name);
    header.insert(header.end(), {"objective", "started", "ended"});
    row(header);
    for (const auto& e : c.experiments) {
        std::vector<std::string> cells{std::to_string(e.index), to_string(e.status)};
        for (const auto& d : c.spec.space) {
            auto it = e.params.find(d.name);
            cells.push_back(it == e.params.end() ? "" : csv_text(it->second));
        }
        cells.push_back(e.objective ? format_real(*e.objective) : "");
        cells.push_back(std::to_string(e.started));
        cells.push_back(e.ended ? std::to_string(*e.ended) : "");
        row(cells);
    }
    return out;
}

std::string export_from_journal(const std::filesystem::path& data_dir, const std::string& campaign_id,
                                ExportFormat format) {
    auto path = data_dir / kJournalFileName;
    if (!std::filesystem::exists(path)) throw CampaignError(CampaignErrc::UnknownCampaign, "no journal at " + path.string());
    SystemClock clock;
    Journal journal(std::make_unique<FileJournalStore>(path, false), clock);
    auto rec = replay(journal.entries());
    const CampaignState* c = rec.state.find(campaign_id);
    if (!c) throw CampaignError(CampaignErrc::UnknownCampaign, campaign_id);
    return export_campaign(*c, format);
}

}  // namespace aeos
