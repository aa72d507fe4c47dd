#pragma once

#include <cstdint>

#include "dynnet/bitvec.hpp"

namespace dynnet {

// 8-bit message tag. The tag byte is the only framing a message gets; the
// body is at most b bits and every control field a protocol needs beyond
// the tag comes out of those b bits.
enum class Tag : std::uint8_t {
    idle = 0,
    flood_tokens = 1,
    coded_vector = 2,
    forward_tokens = 3,
    max_flood = 4,
    descriptor = 5,
    index_triples = 6,
    chunk_up = 7,
    chunk_down = 8,
    chunk_pass = 9,
    solo_chunk = 10,
    pipeline_tokens = 11,
    // _flag variants mark "sender still has undelivered work"; carrying the
    // flag in the tag keeps the body budget available for payload, so a
    // protocol stays feasible even when its payload fills b exactly.
    flood_tokens_flag = 12,
    coded_vector_flag = 13,
    pipeline_tokens_flag = 14,
};

struct Message {
    Tag tag = Tag::idle;
    BitVec body;

    std::size_t wire_bits() const { return 8 + body.bits(); }
};

}  // namespace dynnet
