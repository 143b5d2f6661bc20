// Frozen MS-CHAPv2 / MPPE reference vectors.
// Generated by tests/vectors/gen_mschap_vectors.py, an independent
// python implementation self-checked against the vectors published in
// RFC 2759 section 9.2 and RFC 3079 section 3.5.3.  Do not edit by
// hand; re-run the script instead.
#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace testvec {

struct MsChapVector {
  std::string username;
  std::string password;  // UTF-8
  std::array<std::uint8_t, 16> auth_challenge;
  std::array<std::uint8_t, 16> peer_challenge;
  std::array<std::uint8_t, 24> nt_response;
  std::string authenticator_response;
  std::array<std::uint8_t, 16> master_key;
  std::array<std::uint8_t, 8> send_start_40;
  std::array<std::uint8_t, 8> recv_start_40;
  std::array<std::uint8_t, 8> send_session_40;
  std::array<std::uint8_t, 8> send_start_56;
  std::array<std::uint8_t, 8> recv_start_56;
  std::array<std::uint8_t, 8> send_session_56;
  std::array<std::uint8_t, 16> send_start_128;
  std::array<std::uint8_t, 16> recv_start_128;
  std::array<std::uint8_t, 16> send_session_128;
};

inline const std::array<MsChapVector, 3> kMsChapVectors = {{
  {
    .username = "User",
    .password = "clientPass",
    .auth_challenge = {0x5b, 0x5d, 0x7c, 0x7d, 0x7b, 0x3f, 0x2f, 0x3e, 0x3c, 0x2c, 0x60, 0x21, 0x32, 0x26, 0x26, 0x28},
    .peer_challenge = {0x21, 0x40, 0x23, 0x24, 0x25, 0x5e, 0x26, 0x2a, 0x28, 0x29, 0x5f, 0x2b, 0x3a, 0x33, 0x7c, 0x7e},
    .nt_response = {0x82, 0x30, 0x9e, 0xcd, 0x8d, 0x70, 0x8b, 0x5e, 0xa0, 0x8f, 0xaa, 0x39, 0x81, 0xcd, 0x83, 0x54, 0x42, 0x33, 0x11, 0x4a, 0x3d, 0x85, 0xd6, 0xdf},
    .authenticator_response = "S=407A5589115FD0D6209F510FE9C04566932CDA56",
    .master_key = {0xfd, 0xec, 0xe3, 0x71, 0x7a, 0x8c, 0x83, 0x8c, 0xb3, 0x88, 0xe5, 0x27, 0xae, 0x3c, 0xdd, 0x31},
    .send_start_40 = {0x8b, 0x7c, 0xdc, 0x14, 0x9b, 0x99, 0x3a, 0x1b},
    .recv_start_40 = {0xd5, 0xf0, 0xe9, 0x52, 0x1e, 0x3e, 0xa9, 0x58},
    .send_session_40 = {0xd1, 0x26, 0x9e, 0xc4, 0x9f, 0xa6, 0x2e, 0x3e},
    .send_start_56 = {0x8b, 0x7c, 0xdc, 0x14, 0x9b, 0x99, 0x3a, 0x1b},
    .recv_start_56 = {0xd5, 0xf0, 0xe9, 0x52, 0x1e, 0x3e, 0xa9, 0x58},
    .send_session_56 = {0xd1, 0x5c, 0x00, 0xc4, 0x9f, 0xa6, 0x2e, 0x3e},
    .send_start_128 = {0x8b, 0x7c, 0xdc, 0x14, 0x9b, 0x99, 0x3a, 0x1b, 0xa1, 0x18, 0xcb, 0x15, 0x3f, 0x56, 0xdc, 0xcb},
    .recv_start_128 = {0xd5, 0xf0, 0xe9, 0x52, 0x1e, 0x3e, 0xa9, 0x58, 0x96, 0x45, 0xe8, 0x60, 0x51, 0xc8, 0x22, 0x26},
    .send_session_128 = {0x40, 0x5c, 0xb2, 0x24, 0x7a, 0x79, 0x56, 0xe6, 0xe2, 0x11, 0x00, 0x7a, 0xe2, 0x7b, 0x22, 0xd4},
  },
  {
    .username = "alice.probe",
    .password = "correct horse battery staple",
    .auth_challenge = {0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08, 0x09, 0x0a, 0x0b, 0x0c, 0x0d, 0x0e, 0x0f},
    .peer_challenge = {0x10, 0x11, 0x12, 0x13, 0x14, 0x15, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x1b, 0x1c, 0x1d, 0x1e, 0x1f},
    .nt_response = {0xf2, 0xef, 0x1f, 0x44, 0x04, 0xf5, 0x4d, 0xf5, 0x3f, 0xe2, 0xf1, 0x38, 0x34, 0x9a, 0x38, 0x53, 0x2c, 0xd2, 0xf3, 0x34, 0x11, 0xd6, 0xd5, 0x0a},
    .authenticator_response = "S=7D74F5F57CD65A9E0C9AB27DA9400AF624556FCA",
    .master_key = {0x89, 0xec, 0xba, 0x9d, 0xc5, 0x68, 0x21, 0xbd, 0xae, 0x3e, 0x58, 0x30, 0xab, 0x02, 0xf8, 0x25},
    .send_start_40 = {0xef, 0x9c, 0x15, 0x2c, 0x6d, 0xbd, 0x60, 0xbb},
    .recv_start_40 = {0x30, 0x70, 0x24, 0x0f, 0xf8, 0xb0, 0x36, 0xa9},
    .send_session_40 = {0xd1, 0x26, 0x9e, 0x4c, 0x31, 0xd3, 0x27, 0x31},
    .send_start_56 = {0xef, 0x9c, 0x15, 0x2c, 0x6d, 0xbd, 0x60, 0xbb},
    .recv_start_56 = {0x30, 0x70, 0x24, 0x0f, 0xf8, 0xb0, 0x36, 0xa9},
    .send_session_56 = {0xd1, 0x6a, 0xc3, 0x4c, 0x31, 0xd3, 0x27, 0x31},
    .send_start_128 = {0xef, 0x9c, 0x15, 0x2c, 0x6d, 0xbd, 0x60, 0xbb, 0xfa, 0xe6, 0xff, 0x8c, 0x98, 0x32, 0x27, 0x60},
    .recv_start_128 = {0x30, 0x70, 0x24, 0x0f, 0xf8, 0xb0, 0x36, 0xa9, 0xfe, 0xd5, 0x50, 0x29, 0xe1, 0xd4, 0x8f, 0x3f},
    .send_session_128 = {0x29, 0xf8, 0x02, 0xce, 0x7f, 0x3d, 0xf4, 0x70, 0x3f, 0xac, 0xd4, 0x6a, 0xac, 0x0f, 0x2a, 0x98},
  },
  {
    .username = "bob",
    .password = "p\xc3" "\xa4" "ssw\xc3" "\xb6" "rd\xe2" "\x98" "\x83" "",
    .auth_challenge = {0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x99, 0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff},
    .peer_challenge = {0xff, 0xee, 0xdd, 0xcc, 0xbb, 0xaa, 0x99, 0x88, 0x77, 0x66, 0x55, 0x44, 0x33, 0x22, 0x11, 0x00},
    .nt_response = {0x40, 0x98, 0xe0, 0x54, 0xd0, 0xd3, 0x83, 0x52, 0x6d, 0xc3, 0x25, 0x86, 0x7d, 0xcc, 0x72, 0x0b, 0xfa, 0x97, 0x09, 0x71, 0xe2, 0xb2, 0xf8, 0x9e},
    .authenticator_response = "S=474548D4DD0F8054DABBA18017CF26AD4534C4B2",
    .master_key = {0x89, 0x72, 0x64, 0x8b, 0x65, 0xe2, 0xb9, 0xcb, 0x4a, 0x8d, 0xad, 0x69, 0xcd, 0xf4, 0xe7, 0x98},
    .send_start_40 = {0x89, 0x9d, 0x97, 0x97, 0x64, 0x5a, 0xf8, 0xc0},
    .recv_start_40 = {0xaa, 0xc4, 0x9a, 0xcd, 0x8d, 0x75, 0x63, 0xeb},
    .send_session_40 = {0xd1, 0x26, 0x9e, 0x3f, 0xb9, 0x92, 0x5c, 0xbf},
    .send_start_56 = {0x89, 0x9d, 0x97, 0x97, 0x64, 0x5a, 0xf8, 0xc0},
    .recv_start_56 = {0xaa, 0xc4, 0x9a, 0xcd, 0x8d, 0x75, 0x63, 0xeb},
    .send_session_56 = {0xd1, 0xf1, 0xaa, 0x3f, 0xb9, 0x92, 0x5c, 0xbf},
    .send_start_128 = {0x89, 0x9d, 0x97, 0x97, 0x64, 0x5a, 0xf8, 0xc0, 0x87, 0xe4, 0x27, 0x73, 0xd1, 0x69, 0xf0, 0x33},
    .recv_start_128 = {0xaa, 0xc4, 0x9a, 0xcd, 0x8d, 0x75, 0x63, 0xeb, 0x7c, 0x36, 0xd3, 0x66, 0x06, 0x3a, 0xe1, 0x45},
    .send_session_128 = {0x8e, 0x22, 0xdb, 0x2d, 0xe0, 0x52, 0xa2, 0xcf, 0x43, 0x22, 0xc3, 0x87, 0x8d, 0xfe, 0xb0, 0x3b},
  },
}};

}  // namespace testvec
