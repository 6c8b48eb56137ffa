import re

# JXTA 광고 루트 요소의 네임스페이스 (jxta: 접두사)
JXTA_NAMESPACE = "http://jxta.org"
JXTA_PREFIX = "jxta"

# MSA 자식 요소 순서 (그림 구조 그대로, Ctrr 철자 포함)
MSA_ELEMENT_ORDER = [
    "MSID",
    "Name",
    "Ctrr",
    "SURI",
    "Vers",
    "Desc",
    "Parm",
    "jxta:PipeAdvertisement",
    "Proxy",
    "Auth",
]

MCA_ELEMENT_ORDER = [
    "MCID",
    "Name",
    "Desc",
]

PIPE_ELEMENT_ORDER = [
    "Id",
    "Type",
    "PeerID",
]

# 식별자 형식
MCID_PATTERN = re.compile(r"^mcid:[0-9a-f]{32}$")
MSID_PATTERN = re.compile(r"^msid:([0-9a-f]{32}):([0-9a-f]{32})$")
PEER_ID_PATTERN = re.compile(r"^peer:[0-9a-f]{16}$")
PHONE_ALIAS_PATTERN = re.compile(r"^\+?[0-9]{3,15}$")
GROUP_SEGMENT_PATTERN = re.compile(r"^[a-z0-9][a-z0-9_-]*$")

# 광고 파일 확장자 (코퍼스 디렉토리)
MSA_FILE_SUFFIX = ".msa.xml"
MCA_FILE_SUFFIX = ".mca.xml"

# 캐시를 보유하고 인덱스를 유지하는 역할
CACHING_ROLES = {
    "rendezvous",
    "super",
}

# 릴레이 기능을 가진 역할
RELAYING_ROLES = {
    "relay",
    "super",
}
