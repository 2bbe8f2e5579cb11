// Copyright 2026 The aeos Authors
// SPDX-License-Identifier: Apache-2.0

#include "aeos/journal.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace aeos {

const char* to_string(EntryKind k) noexcept {
    switch (k) {
    case EntryKind::CampaignCreated: return "CampaignCreated";
    case EntryKind::CampaignStatusChanged: return "CampaignStatusChanged";
    case EntryKind::ExperimentAppended: return "ExperimentAppended";
    case EntryKind::ExperimentUpdated: return "ExperimentUpdated";
    case EntryKind::ModuleEvent: return "ModuleEvent";
    }
    return "Unknown";
}

std::optional<EntryKind> entry_kind_from(std::string_view s) noexcept {
    for (auto k : {EntryKind::CampaignCreated, EntryKind::CampaignStatusChanged, EntryKind::ExperimentAppended,
                   EntryKind::ExperimentUpdated, EntryKind::ModuleEvent})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

const char* to_string(JournalErrc c) noexcept {
    switch (c) {
    case JournalErrc::StorageFull: return "StorageFull";
    case JournalErrc::IoFailure: return "IoFailure";
    case JournalErrc::CorruptEntry: return "CorruptEntry";
    }
    return "Unknown";
}

Value JournalEntry::to_value() const {
    return Value::Record{{"seq", static_cast<std::int64_t>(seq)},
                         {"timestamp", timestamp},
                         {"kind", aeos::to_string(kind)},
                         {"body", body}};
}

std::string JournalEntry::encode() const { return canonical_encode(to_value()); }

JournalEntry JournalEntry::decode(std::string_view line) {
    Value v;
    try {
        v = parse_json(line);
    } catch (const Error& e) {
        throw JournalError(JournalErrc::CorruptEntry, e.what());
    }
    const Value* seq = v.find("seq");
    const Value* ts = v.find("timestamp");
    const Value* kind = v.find("kind");
    const Value* body = v.find("body");
    if (!seq || !seq->is_int() || seq->as_int() < 1 || !ts || !ts->is_int() || !kind || !kind->is_text() || !body ||
        !body->is_record() || v.as_record().size() != 4)
        throw JournalError(JournalErrc::CorruptEntry, "entry does not have the journal shape");
    auto k = entry_kind_from(kind->as_text());
    if (!k) throw JournalError(JournalErrc::CorruptEntry, "unknown entry kind " + kind->as_text());
    return JournalEntry{static_cast<std::uint64_t>(seq->as_int()), ts->as_int(), *k, body->as_record()};
}

//---------------------------------------------------------------------------//
// File store
//---------------------------------------------------------------------------//

namespace {

[[noreturn]] void throw_io(const std::string& what, int err) {
    auto errc = (err == ENOSPC || err == EDQUOT) ? JournalErrc::StorageFull : JournalErrc::IoFailure;
    throw JournalError(errc, what + ": " + std::strerror(err));
}

}  // namespace

FileJournalStore::FileJournalStore(std::filesystem::path path, bool sync) : path_(std::move(path)), sync_(sync) {
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw_io("open " + path_.string(), errno);
}

FileJournalStore::~FileJournalStore() {
    if (fd_ >= 0) ::close(fd_);
}

std::string FileJournalStore::read_all() {
    std::string out;
    char buf[1 << 16];
    off_t off = 0;
    while (true) {
        ssize_t n = ::pread(fd_, buf, sizeof buf, off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_io("read " + path_.string(), errno);
        }
        if (n == 0) break;
        out.append(buf, static_cast<std::size_t>(n));
        off += n;
    }
    return out;
}

void FileJournalStore::truncate(std::size_t size) {
    if (::ftruncate(fd_, static_cast<off_t>(size)) != 0) throw_io("truncate " + path_.string(), errno);
    if (sync_ && ::fdatasync(fd_) != 0) throw_io("sync " + path_.string(), errno);
}

void FileJournalStore::append(std::string_view bytes) {
    struct stat st {};
    if (::fstat(fd_, &st) != 0) throw_io("stat " + path_.string(), errno);
    auto before = static_cast<std::size_t>(st.st_size);

    std::size_t done = 0;
    while (done < bytes.size()) {
        ssize_t n = ::write(fd_, bytes.data() + done, bytes.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            int err = errno;
            // Roll back a short write so the failed entry leaves no torn line.
            if (done > 0 && ::ftruncate(fd_, static_cast<off_t>(before)) != 0) {
            }
            throw_io("append " + path_.string(), err);
        }
        done += static_cast<std::size_t>(n);
    }
    if (sync_ && ::fdatasync(fd_) != 0) {
        int err = errno;
        if (::ftruncate(fd_, static_cast<off_t>(before)) != 0) {
        }
        throw_io("sync " + path_.string(), err);
    }
}

//---------------------------------------------------------------------------//
// Memory store
//---------------------------------------------------------------------------//

std::string MemoryJournalStore::read_all() {
    std::lock_guard lock(mu_);
    return data_;
}

void MemoryJournalStore::truncate(std::size_t size) {
    std::lock_guard lock(mu_);
    data_.resize(std::min(size, data_.size()));
}

void MemoryJournalStore::append(std::string_view bytes) {
    std::lock_guard lock(mu_);
    if (fail_ && fail_count_ > 0) {
        auto errc = *fail_;
        if (--fail_count_ == 0) fail_.reset();
        throw JournalError(errc, "injected fault");
    }
    data_.append(bytes);
}

void MemoryJournalStore::fail_next(JournalErrc errc, int count) {
    std::lock_guard lock(mu_);
    fail_ = errc;
    fail_count_ = count;
}

std::string MemoryJournalStore::contents() const {
    std::lock_guard lock(mu_);
    return data_;
}

//---------------------------------------------------------------------------//
// Journal
//---------------------------------------------------------------------------//

Journal::Journal(std::unique_ptr<JournalStore> store, const Clock& clock) : store_(std::move(store)), clock_(clock) {
    std::string data = store_->read_all();
    std::size_t pos = 0;
    std::size_t valid_end = 0;
    std::size_t line_no = 0;
    while (pos < data.size()) {
        std::size_t nl = data.find('\n', pos);
        bool terminated = nl != std::string::npos;
        std::size_t end = terminated ? nl : data.size();
        std::string_view line(data.data() + pos, end - pos);
        std::size_t next = terminated ? nl + 1 : data.size();
        bool last = next >= data.size();
        ++line_no;

        std::optional<JournalEntry> entry;
        std::string problem;
        if (!terminated) {
            problem = "unterminated final line";
        } else {
            try {
                entry = JournalEntry::decode(line);
            } catch (const JournalError& e) {
                problem = e.detail();
            }
        }

        if (!entry) {
            if (!last)
                throw JournalError(JournalErrc::CorruptEntry, "line " + std::to_string(line_no) + ": " + problem);
            warnings_.push_back("torn tail at line " + std::to_string(line_no) + " (" + problem + "); truncated " +
                                std::to_string(data.size() - valid_end) + " octets");
            store_->truncate(valid_end);
            break;
        }
        std::uint64_t expected = entries_.size() + 1;
        if (entry->seq != expected)
            throw JournalError(JournalErrc::CorruptEntry, "line " + std::to_string(line_no) + ": seq " +
                                                              std::to_string(entry->seq) + ", expected " +
                                                              std::to_string(expected));
        entries_.push_back(std::move(*entry));
        valid_end = next;
        pos = next;
    }
}

JournalEntry Journal::append(EntryKind kind, Value::Record body) {
    std::lock_guard write_lock(write_mu_);
    JournalEntry e;
    {
        std::lock_guard lock(mu_);
        e.seq = entries_.size() + 1;
    }
    e.timestamp = clock_.wall_ms();
    e.kind = kind;
    e.body = std::move(body);

    std::string line;
    try {
        line = e.encode();
    } catch (const CodecError& err) {
        throw JournalError(JournalErrc::IoFailure, std::string("entry cannot be encoded: ") + err.what());
    }
    line.push_back('\n');
    store_->append(line);

    {
        std::lock_guard lock(mu_);
        entries_.push_back(e);
    }
    cv_.notify_all();
    return e;
}

std::uint64_t Journal::head() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::vector<JournalEntry> Journal::since(std::uint64_t after, std::size_t limit) const {
    std::lock_guard lock(mu_);
    std::vector<JournalEntry> out;
    for (std::size_t i = after; i < entries_.size() && out.size() < limit; ++i) out.push_back(entries_[i]);
    return out;
}

std::uint64_t Journal::wait_beyond(std::uint64_t after, std::chrono::steady_clock::time_point deadline) const {
    std::unique_lock lock(mu_);
    cv_.wait_until(lock, deadline, [&] { return entries_.size() > after; });
    return entries_.size();
}

}  // namespace aeos
