// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

// Append-only journal: the single durable source of truth.
//
// On disk it is newline-delimited canonical JSON, one entry per line:
//   {"body":{...},"kind":"ExperimentAppended","seq":7,"timestamp":1700000000000}

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aeos/clock.hpp"
#include "aeos/error.hpp"
#include "aeos/value.hpp"

namespace aeos {

enum class EntryKind { CampaignCreated, CampaignStatusChanged, ExperimentAppended, ExperimentUpdated, ModuleEvent };

const char* to_string(EntryKind k) noexcept;
std::optional<EntryKind> entry_kind_from(std::string_view s) noexcept;

struct JournalEntry {
    std::uint64_t seq = 0;
    std::int64_t timestamp = 0;
    EntryKind kind = EntryKind::ModuleEvent;
    Value::Record body;

    Value to_value() const;
    /// Canonical encoding without the trailing newline.
    std::string encode() const;
    /// Throws JournalError(CorruptEntry).
    static JournalEntry decode(std::string_view line);
    friend bool operator==(const JournalEntry&, const JournalEntry&) = default;
};

enum class JournalErrc { StorageFull, IoFailure, CorruptEntry };

const char* to_string(JournalErrc c) noexcept;

class JournalError : public Error {
public:
    JournalError(JournalErrc c, const std::string& detail) : Error(to_string(c), detail), errc_(c) {}
    JournalErrc errc() const noexcept { return errc_; }

private:
    JournalErrc errc_;
};

/// Raw byte storage under a journal.
class JournalStore {
public:
    virtual ~JournalStore() = default;
    virtual std::string read_all() = 0;
    virtual void truncate(std::size_t size) = 0;
    /// Appends and flushes. On failure nothing observable is appended.
    virtual void append(std::string_view bytes) = 0;
};

class FileJournalStore final : public JournalStore {
public:
    /// Opens or creates `path`. With `sync`, every append is fdatasync'ed.
    explicit FileJournalStore(std::filesystem::path path, bool sync = true);
    ~FileJournalStore() override;

    FileJournalStore(const FileJournalStore&) = delete;
    FileJournalStore& operator=(const FileJournalStore&) = delete;

    std::string read_all() override;
    void truncate(std::size_t size) override;
    void append(std::string_view bytes) override;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    bool sync_;
    int fd_ = -1;
};

/// In-memory store with fault injection.
class MemoryJournalStore final : public JournalStore {
public:
    MemoryJournalStore() = default;
    explicit MemoryJournalStore(std::string initial) : data_(std::move(initial)) {}

    std::string read_all() override;
    void truncate(std::size_t size) override;
    void append(std::string_view bytes) override;

    /// The next `count` appends fail with `errc`.
    void fail_next(JournalErrc errc, int count = 1);
    std::string contents() const;

private:
    mutable std::mutex mu_;
    std::string data_;
    std::optional<JournalErrc> fail_;
    int fail_count_ = 0;
};

class Journal {
public:
    /// Loads and validates existing content. A torn tail (an unterminated or
    /// unparsable final line) is truncated away and reported in warnings();
    /// damage anywhere else throws JournalError(CorruptEntry).
    Journal(std::unique_ptr<JournalStore> store, const Clock& clock);

    Journal(const Journal&) = delete;
    Journal& operator=(const Journal&) = delete;

    /// Durable before it returns. Throws StorageFull or IoFailure, in which
    /// case no seq is consumed.
    JournalEntry append(EntryKind kind, Value::Record body);

    std::uint64_t head() const;
    /// Entries with seq > `after`, in order, at most `limit` of them.
    std::vector<JournalEntry> since(std::uint64_t after, std::size_t limit = SIZE_MAX) const;
    std::vector<JournalEntry> entries() const { return since(0); }

    /// Blocks until head() > `after` or the deadline passes; returns head().
    std::uint64_t wait_beyond(std::uint64_t after, std::chrono::steady_clock::time_point deadline) const;

    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    std::unique_ptr<JournalStore> store_;
    const Clock& clock_;
    std::vector<std::string> warnings_;

    // Serializes writers so seq order equals durable order.
    std::mutex write_mu_;
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::vector<JournalEntry> entries_;
};

/// Default journal file name inside a data directory.
inline constexpr const char* kJournalFileName = "journal.ndjson";

}  // namespace aeos
