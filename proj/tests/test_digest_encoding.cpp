#include <doctest.h>

#include "cdvcs/digest.hpp"
#include "cdvcs/encoding.hpp"
#include "cdvcs/error.hpp"
#include "cdvcs/transaction.hpp"

using namespace cdvcs;

TEST_CASE("sha256 known vectors") {
  CHECK(sha256("").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256("abc").hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256("abc").short_hex() == "ba7816bf");
}

TEST_CASE("digest hex round trip and rejects bad input") {
  const auto d = sha256("x");
  CHECK(Digest::from_hex(d.hex()) == d);
  CHECK_THROWS_AS(Digest::from_hex("abc"), Error);
  std::string bad(64, 'g');
  CHECK_THROWS_AS(Digest::from_hex(bad), Error);
}

TEST_CASE("writer and reader agree; integers are big-endian") {
  Writer w;
  w.u8(7);
  w.u32(0x01020304);
  w.u64(0x0102030405060708ull);
  w.str("hello");
  w.digest(sha256("d"));
  const Bytes& b = w.data();
  CHECK(b[1] == 0x01);
  CHECK(b[4] == 0x04);
  Reader r(b);
  CHECK(r.u8() == 7);
  CHECK(r.u32() == 0x01020304u);
  CHECK(r.u64() == 0x0102030405060708ull);
  CHECK(r.str() == "hello");
  CHECK(r.digest() == sha256("d"));
  CHECK(r.done());
  CHECK_NOTHROW(r.expect_done());
}

TEST_CASE("reader rejects truncation and absurd counts") {
  Writer w;
  w.str("hello");
  Bytes b = w.data();
  b.pop_back();
  Reader r(b);
  try {
    r.str();
    FAIL("expected ProtocolError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProtocolError);
  }
  Writer big;
  big.u32(1'000'000);
  Reader r2(big.data());
  CHECK_THROWS_AS(r2.count(32), Error);
}

TEST_CASE("transaction encoding is canonical") {
  Transaction a{"book", {{"guest", "x"}, {"room", "1"}}};
  const auto bytes = a.encode();
  CHECK(Transaction::decode(bytes) == a);
  CHECK(Transaction{"book", {{"room", "1"}, {"guest", "x"}}}.encode() == bytes);
  Bytes trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(Transaction::decode(trailing), Error);
}
